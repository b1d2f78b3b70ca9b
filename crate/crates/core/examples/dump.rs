//! Scratch dump for calibration (not part of the deliverable).

use sramlab_core::analysis::*;
use sramlab_core::circuit::*;

fn main() {
    let g6 = CellGeometry::new(Topology::SixT);
    let g9 = CellGeometry::new(Topology::NineT);

    // Leakage calibration.
    for (name, g) in [("6t", &g6), ("9t", &g9)] {
        let leak = leakage(g, 1.0, 27.0).unwrap();
        println!("leak {name}: {leak:.4e} A");
    }

    // Write butterfly shape.
    let b = butterfly(&g6, CellMode::Write0, 1.0, 27.0).unwrap();
    let ints = b.intersections();
    println!("write0 intersections: {ints:?}");
    let pts1 = b.vtc1.points();
    let pts2 = b.vtc2.points();
    for k in (0..pts1.len()).step_by(20) {
        println!(
            "v={:.3} f={:.4} g={:.4}",
            pts1[k].0, pts1[k].1, pts2[k].1
        );
    }

    // 6T vs 9T hold VTC difference profile.
    {
        use sramlab_core::analysis::extract_vtc;
        let v6 = extract_vtc(&g6, CellMode::Hold, Side::One, 1.0, 27.0).unwrap();
        let v9 = extract_vtc(&g9, CellMode::Hold, Side::One, 1.0, 27.0).unwrap();
        let mut worst = (0.0f64, 0.0f64);
        for (a, b) in v6.points().iter().zip(v9.points()) {
            let d = (a.1 - b.1).abs();
            if d > worst.1 { worst = (a.0, d); }
        }
        println!("hold vtc1 6T-vs-9T worst diff: {:.6} V at vin={:.3}", worst.1, worst.0);
        for k in [90, 92, 94, 96, 98, 100] {
            let (x, y6) = v6.points()[k];
            let y9 = v9.points()[k].1;
            println!("  vin={:.3} q6={:.6} q9={:.6} d={:+.2e}", x, y6, y9, y6 - y9);
        }
        let s2_6 = extract_vtc(&g6, CellMode::Hold, Side::Two, 1.0, 27.0).unwrap();
        let s2_9 = extract_vtc(&g9, CellMode::Hold, Side::Two, 1.0, 27.0).unwrap();
        let mut worst2 = (0.0f64, 0.0f64);
        for (a, b) in s2_6.points().iter().zip(s2_9.points()) {
            let d = (a.1 - b.1).abs();
            if d > worst2.1 { worst2 = (a.0, d); }
        }
        println!("hold vtc2 6T-vs-9T worst diff: {:.6} V at vin={:.3}", worst2.1, worst2.0);
    }

    // Read/hold SNM numbers.
    for mode in [CellMode::Hold, CellMode::Read] {
        for (name, g) in [("6t", &g6), ("9t", &g9)] {
            let b = butterfly(g, mode, 1.0, 27.0).unwrap();
            let ints = b.intersections();
            let rot = snm_from_butterfly(&b);
            let orc = snm_bruteforce_oracle(&b, 1e-3);
            println!(
                "{mode:?} {name}: ints={} rot={:?} oracle={:?}",
                ints.len(),
                rot.map(|r| (r.lobe_high, r.lobe_low, r.snm)),
                orc.map(|r| r.snm)
            );
        }
    }

    // N-curves.
    for (name, g) in [("6t", &g6), ("9t", &g9)] {
        let r = ncurve(g, NCurveMode::Read, 1.0, 27.0).unwrap();
        println!(
            "ncurve read {name}: crossings={:?} svnm={:?} sinm={:?} wtv={:?} wti={:?} spnm={:?} wtp={:?}",
            r.crossings, r.metrics.svnm, r.metrics.sinm, r.metrics.wtv, r.metrics.wti, r.metrics.spnm, r.metrics.wtp
        );
        let w = ncurve(g, NCurveMode::Write, 1.0, 27.0).unwrap();
        println!(
            "ncurve write {name}: crossings={:?} icrit={:?}",
            w.crossings, w.metrics.icrit_wr
        );
        let neg = w.samples.points().iter().filter(|p| p.1 < 0.0).count();
        println!("  write curve negative samples: {neg}/{}", w.samples.len());
        let pts = r.samples.points();
        for p in &pts[pts.len() - 8..] {
            println!("  read tail v={:.3} i={:+.6e}", p.0, p.1);
        }
        for p in &pts[240..252] {
            println!("  read mid  v={:.3} i={:+.6e}", p.0, p.1);
        }
    }
}

#[allow(dead_code)]
fn noop() {}
