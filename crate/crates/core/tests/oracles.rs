use dgff::brw::m_tilde;
use dgff::green::{green_matrix, potential_kernel};
use dgff::lattice::LatticeDomain;
use dgff::network::{effective_resistance, Network};
use dgff::rwre::{hitting_time, WalkKernel};
use std::f64::consts::PI;
use std::sync::Arc;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn potential_kernel_matches_closed_forms() {
    close(potential_kernel((0, 0)), 0.0, 1e-15);
    close(potential_kernel((1, 0)), 1.0, 1e-13);
    close(potential_kernel((1, 1)), 4.0 / PI, 1e-13);
    close(potential_kernel((2, 0)), 4.0 - 8.0 / PI, 1e-13);
    close(potential_kernel((2, 1)), 8.0 / PI - 1.0, 1e-13);
    close(potential_kernel((2, 2)), 16.0 / (3.0 * PI), 1e-13);
    close(potential_kernel((3, 0)), 17.0 - 48.0 / PI, 1e-12);
    close(potential_kernel((0, -2)), potential_kernel((2, 0)), 1e-15);
}

#[test]
fn two_by_two_box_green_matrix() {
    let d = Arc::new(LatticeDomain::make_box(3).unwrap());
    let g = green_matrix(&d).unwrap();
    close(g.entry((1, 1), (1, 1)), 7.0 / 6.0, 1e-14);
    close(g.entry((1, 1), (2, 1)), 1.0 / 3.0, 1e-14);
    close(g.entry((1, 1), (2, 2)), 1.0 / 6.0, 1e-14);
}

#[test]
fn single_vertex_green_value() {
    let d = Arc::new(LatticeDomain::make_box(2).unwrap());
    let g = green_matrix(&d).unwrap();
    close(g.get(0, 0), 1.0, 1e-15);
}

#[test]
fn unit_square_resistances() {
    let net = Network::new(4, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
    close(effective_resistance(&net, &[0], &[1]).unwrap().0, 0.75, 1e-14);
    close(effective_resistance(&net, &[0], &[2]).unwrap().0, 1.0, 1e-14);
}

#[test]
fn wheatstone_bridge_resistance() {
    let net = Network::new(4, vec![(0, 1, 1.0), (0, 2, 2.0), (1, 2, 1.0), (1, 3, 2.0), (2, 3, 1.0)]).unwrap();
    close(effective_resistance(&net, &[0], &[3]).unwrap().0, 5.0 / 7.0, 1e-14);
}

#[test]
fn cycle_hitting_time() {
    let n = 6;
    let net = Network::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect()).unwrap();
    let k = WalkKernel::from_network(net);
    for j in 1..n {
        close(hitting_time(&k, 0, j).unwrap(), (j * (n - j)) as f64, 1e-11);
    }
}

#[test]
fn brw_centering_value() {
    let b = 2.0f64;
    let n = 10.0;
    let expected = (2.0 * b.ln()).sqrt() * n - 3.0 / (2.0 * (2.0 * b.ln()).sqrt()) * n.ln();
    close(m_tilde(2, 10), expected, 1e-12);
}
