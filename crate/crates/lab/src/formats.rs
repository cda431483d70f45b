//! File formats: environment edge tables, trajectories, clock series and
//! solver grids. Column layouts are documented in `docs/formats.md`.
//!
//! Binary files are little endian and start with an 8-byte magic, then a
//! fixed header, then `count` values as `f64`.

use std::fmt::Write as _;

use rcm_core::lattice::Edge;
use rcm_core::walk::{ClockSeries, WalkTrajectory};
use rcm_core::{Boundary, Conductances, LatticeRegion, Site, MAX_DIM};

use crate::config::LawConfig;
use crate::error::{LabError, Result};

pub const ENV_MAGIC: &[u8; 8] = b"RCMENV01";
pub const GRID_MAGIC: &[u8; 8] = b"RCMGRID1";

/// Provenance stamped into every file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// 16 hex digits.
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn new(config_hash: &str, master_seed: u64) -> Self {
        Provenance { config_hash: config_hash.to_string(), master_seed }
    }

    fn comment(&self, what: &str) -> String {
        format!("# rcmlab {what} config_hash={} seed={}\n", self.config_hash, self.master_seed)
    }

    fn hash_bytes(&self) -> [u8; 16] {
        let mut b = [b'0'; 16];
        for (dst, src) in b.iter_mut().zip(self.config_hash.bytes()) {
            *dst = src;
        }
        b
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(LabError::Format("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn magic(&mut self, m: &[u8; 8]) -> Result<()> {
        if self.take(8)? != m {
            return Err(LabError::Format("bad magic".into()));
        }
        Ok(())
    }
    fn provenance(&mut self) -> Result<Provenance> {
        let h = self.take(16)?;
        let config_hash = String::from_utf8(h.to_vec()).map_err(|_| LabError::Format("bad config hash".into()))?;
        Ok(Provenance { config_hash, master_seed: self.u64()? })
    }
    fn region(&mut self, boundary: Boundary) -> Result<LatticeRegion> {
        let d = self.u32()? as usize;
        if d == 0 || d > MAX_DIM {
            return Err(LabError::Format(format!("dimension {d} out of range")));
        }
        let half = self.u32()?;
        let mut c = [0i32; MAX_DIM];
        for v in c.iter_mut().take(d) {
            *v = self.i32()?;
        }
        Ok(LatticeRegion::new(Site::new(&c[..d]), half, boundary)?)
    }
    fn values(&mut self, expected: usize) -> Result<Vec<f64>> {
        let count = self.u64()? as usize;
        if count != expected {
            return Err(LabError::Format(format!("expected {expected} values, header says {count}")));
        }
        (0..count).map(|_| self.f64()).collect::<Result<Vec<f64>>>().and_then(|v| {
            if self.pos != self.buf.len() {
                Err(LabError::Format("trailing bytes".into()))
            } else {
                Ok(v)
            }
        })
    }
}

fn write_region(w: &mut Writer, r: &LatticeRegion) {
    w.u32(r.dim() as u32);
    w.u32(r.half_side());
    for &c in r.center().coords() {
        w.i32(c);
    }
}

/// Edge conductances over a region, in canonical edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvTable {
    pub region: LatticeRegion,
    pub env_seed: u64,
    pub law: LawConfig,
    values: Vec<f64>,
    /// Index of the first edge of each site.
    first: Vec<usize>,
}

impl EnvTable {
    pub fn new(region: LatticeRegion, env_seed: u64, law: LawConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.edge_count() {
            return Err(LabError::Format(format!("{} values for {} edges", values.len(), region.edge_count())));
        }
        let mut first = Vec::with_capacity(region.len());
        let mut k = 0;
        for x in region.sites() {
            first.push(k);
            k += (0..region.dim()).filter(|&axis| region.contains(&x.neighbor(2 * axis))).count();
        }
        Ok(EnvTable { region, env_seed, law, values, first })
    }

    pub fn capture<C: Conductances + ?Sized>(env: &C, region: LatticeRegion, env_seed: u64, law: LawConfig) -> Self {
        let values = region.edges().map(|e| env.conductance(&e)).collect();
        EnvTable::new(region, env_seed, law, values).expect("edge count matches")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_bytes(&self, prov: &Provenance) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(96 + 8 * self.values.len()));
        w.0.extend_from_slice(ENV_MAGIC);
        w.0.extend_from_slice(&prov.hash_bytes());
        w.u64(prov.master_seed);
        write_region(&mut w, &self.region);
        w.u64(self.env_seed);
        w.f64(self.law.rho);
        w.f64(self.law.alpha);
        w.f64(self.law.a_p);
        w.f64(self.law.homogeneous.unwrap_or(f64::NAN));
        w.u64(self.values.len() as u64);
        for &v in &self.values {
            w.f64(v);
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8]) -> Result<(Self, Provenance)> {
        let mut r = Reader { buf, pos: 0 };
        r.magic(ENV_MAGIC)?;
        let prov = r.provenance()?;
        let region = r.region(Boundary::Free)?;
        let env_seed = r.u64()?;
        let rho = r.f64()?;
        let alpha = r.f64()?;
        let a_p = r.f64()?;
        let h = r.f64()?;
        let law = LawConfig { d: region.dim(), rho, alpha, a_p, homogeneous: (!h.is_nan()).then_some(h) };
        let values = r.values(region.edge_count())?;
        Ok((EnvTable::new(region, env_seed, law, values)?, prov))
    }

    /// CSV: `x1..xd, y1..yd, mu` per edge.
    pub fn to_csv(&self, prov: &Provenance) -> String {
        let d = self.region.dim();
        let mut out = prov.comment("env");
        let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        let ys: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
        writeln!(out, "{},{},mu", xs.join(","), ys.join(",")).unwrap();
        for (e, v) in self.region.edges().zip(&self.values) {
            let (x, y) = e.endpoints();
            for c in x.coords().iter().chain(y.coords()) {
                write!(out, "{c},").unwrap();
            }
            writeln!(out, "{v:?}").unwrap();
        }
        out
    }
}

impl Conductances for EnvTable {
    fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Stored value, zero for bonds outside the table.
    fn conductance(&self, e: &Edge) -> f64 {
        let r = &self.region;
        match (r.index(e.lo()), r.contains(&e.hi())) {
            (Some(i), true) => {
                let x = e.lo();
                let before = (0..e.axis()).filter(|&axis| r.contains(&x.neighbor(2 * axis))).count();
                self.values[self.first[i] + before]
            }
            _ => 0.0,
        }
    }
}

/// Trajectory CSV: `epoch, x1..xd`, one row per holding interval.
pub fn trajectory_csv(traj: &WalkTrajectory, walker: u64, prov: &Provenance) -> String {
    let d = traj.start().dim();
    let mut out = prov.comment("trajectory");
    let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(out, "walker_id,epoch,{}", xs.join(",")).unwrap();
    for (site, t) in traj.jumps() {
        write!(out, "{walker},{t:?}").unwrap();
        for c in site.coords() {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Clock series CSV: `n, t, S_n_t, walker_id`.
pub fn clock_csv(series: &[(u64, ClockSeries)], prov: &Provenance) -> String {
    let mut out = prov.comment("clock");
    out.push_str("n,t,S_n_t,walker_id\n");
    for (w, s) in series {
        for (t, v) in s.t_grid.iter().zip(&s.values) {
            writeln!(out, "{},{t:?},{v:?},{w}", s.n).unwrap();
        }
    }
    out
}

/// What a solver grid holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// `p_t(x0, .)`
    Kernel,
    /// `int_0^t p_s(x0, .) ds`
    Integrated,
    /// `g(x0, .)`
    Green,
}

impl GridKind {
    fn code(self) -> u8 {
        match self {
            GridKind::Kernel => 0,
            GridKind::Integrated => 1,
            GridKind::Green => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(GridKind::Kernel),
            1 => Ok(GridKind::Integrated),
            2 => Ok(GridKind::Green),
            _ => Err(LabError::Format(format!("unknown grid kind {c}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GridKind::Kernel => "kernel",
            GridKind::Integrated => "integrated_kernel",
            GridKind::Green => "green",
        }
    }
}

/// Values of a kernel or Green function over a box at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub kind: GridKind,
    pub region: LatticeRegion,
    pub source: Site,
    /// Time (zero for Green functions).
    pub t: f64,
    pub tol: f64,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn to_bytes(&self, prov: &Provenance) -> Vec<u8> {
        let mut w = Writer(Vec::with_capacity(128 + 8 * self.values.len()));
        w.0.extend_from_slice(GRID_MAGIC);
        w.0.extend_from_slice(&prov.hash_bytes());
        w.u64(prov.master_seed);
        write_region(&mut w, &self.region);
        w.u8(self.kind.code());
        w.u8(matches!(self.region.boundary(), Boundary::Dirichlet) as u8);
        for &c in self.source.coords() {
            w.i32(c);
        }
        w.f64(self.t);
        w.f64(self.tol);
        w.u64(self.values.len() as u64);
        for &v in &self.values {
            w.f64(v);
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8]) -> Result<(Self, Provenance)> {
        let mut r = Reader { buf, pos: 0 };
        r.magic(GRID_MAGIC)?;
        let prov = r.provenance()?;
        let region = r.region(Boundary::Free)?;
        let kind = GridKind::from_code(r.u8()?)?;
        let region = if r.u8()? == 1 { region.with_boundary(Boundary::Dirichlet) } else { region };
        let mut c = [0i32; MAX_DIM];
        for v in c.iter_mut().take(region.dim()) {
            *v = r.i32()?;
        }
        let source = Site::new(&c[..region.dim()]);
        let t = r.f64()?;
        let tol = r.f64()?;
        let values = r.values(region.len())?;
        Ok((Grid { kind, region, source, t, tol, values }, prov))
    }

    /// CSV: `x1..xd, value`.
    pub fn to_csv(&self, prov: &Provenance) -> String {
        let d = self.region.dim();
        let mut out = prov.comment(self.kind.label());
        writeln!(out, "# t={:?} tol={:?}", self.t, self.tol).unwrap();
        let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},value", xs.join(",")).unwrap();
        for (x, v) in self.region.sites().zip(&self.values) {
            for c in x.coords() {
                write!(out, "{c},").unwrap();
            }
            writeln!(out, "{v:?}").unwrap();
        }
        out
    }
}
