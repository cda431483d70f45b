use rcm_core::{Boundary, Conductances, LatticeRegion, Site};
use rcm_lab::config::LawConfig;
use rcm_lab::formats::{EnvTable, Grid, GridKind, Provenance};

fn prov() -> Provenance {
    Provenance::new("0123456789abcdef", 42)
}

#[test]
fn env_table_bytes_round_trip() {
    for d in 2..=3usize {
        let region = LatticeRegion::new(Site::new(&[2, -1, 0][..d]), 3, Boundary::Free).unwrap();
        let law = LawConfig::cauchy(d);
        let field = law.field(7).unwrap();
        let table = EnvTable::capture(&field, region, 7, law.clone());
        let bytes = table.to_bytes(&prov());
        let (back, p) = EnvTable::from_bytes(&bytes).unwrap();
        assert_eq!(p, prov());
        assert_eq!(back.region, region);
        assert_eq!(back.env_seed, 7);
        assert_eq!(back.values(), table.values());
        for e in region.edges() {
            assert_eq!(back.conductance(&e).to_bits(), field.conductance(&e).to_bits());
        }
    }
}

#[test]
fn env_table_rejects_bad_input() {
    let region = LatticeRegion::cube(2, 2, Boundary::Free).unwrap();
    let law = LawConfig::cauchy(2);
    assert!(EnvTable::new(region, 0, law.clone(), vec![1.0; 3]).is_err());
    let table = EnvTable::capture(&law.field(1).unwrap(), region, 1, law);
    let bytes = table.to_bytes(&prov());
    assert!(EnvTable::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert!(EnvTable::from_bytes(&bad).is_err());
}

#[test]
fn env_table_csv_has_one_row_per_edge() {
    let region = LatticeRegion::cube(2, 2, Boundary::Free).unwrap();
    let law = LawConfig::cauchy(2);
    let table = EnvTable::capture(&law.field(3).unwrap(), region, 3, law);
    let csv = table.to_csv(&prov());
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# rcmlab"));
    let header = lines.next().unwrap();
    let cols = header.split(',').count();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), region.edge_count());
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
}

#[test]
fn grid_bytes_round_trip() {
    for (kind, boundary) in [
        (GridKind::Kernel, Boundary::Free),
        (GridKind::Integrated, Boundary::Free),
        (GridKind::Green, Boundary::Dirichlet),
    ] {
        let region = LatticeRegion::new(Site::new(&[1, 0, -1]), 2, boundary).unwrap();
        let values: Vec<f64> = (0..region.len()).map(|i| (i as f64).sin() * 1e-3).collect();
        let g = Grid { kind, region, source: Site::new(&[1, 1, -1]), t: 2.5, tol: 1e-9, values };
        let (back, p) = Grid::from_bytes(&g.to_bytes(&prov())).unwrap();
        assert_eq!(back, g);
        assert_eq!(p, prov());
    }
}

#[test]
fn grid_csv_lists_every_site() {
    let region = LatticeRegion::cube(2, 1, Boundary::Free).unwrap();
    let g = Grid { kind: GridKind::Kernel, region, source: Site::origin(2), t: 1.0, tol: 1e-8, values: vec![0.125; 9] };
    let csv = g.to_csv(&prov());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[2], "x1,x2,value");
    assert_eq!(lines.len(), 3 + 9);
    assert_eq!(lines[3], "-1,-1,0.125");
}
