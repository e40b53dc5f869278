use cone_lab::geometry::{self, halfplane};
use cone_lab::gromov;
use cone_lab::hamenstadt;
use cone_lab::measures::{self, Cell, LeafSet};
use cone_lab::models::{flow, make_diagonal, make_halfplane, make_warped, Point};
use cone_lab::uniformize;
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn rho_scales_under_the_flow(u in -3.0..3.0f64, v in -3.0..3.0f64, t0 in -2.0..2.0f64, s in -2.0..2.0f64, a in 0.5..2.0f64) {
        let m = make_halfplane(a).unwrap();
        let (x, y) = (Point::planar(u, t0), Point::planar(v, t0));
        let r0 = hamenstadt::rho(&m, &x, &y, 1e-12).unwrap().value;
        let r1 = hamenstadt::rho(&m, &flow(&m, &x, s), &flow(&m, &y, s), 1e-12).unwrap().value;
        prop_assert!((r1 - (a * s).exp() * r0).abs() <= 1e-9 * r1.max(1e-300));
        let back = hamenstadt::rho(&m, &y, &x, 1e-12).unwrap().value;
        prop_assert!((back - r0).abs() <= 1e-12 * r0.max(1.0));
    }

    #[test]
    fn separated_counts_depend_on_s_minus_l(s in 0.0..4.0f64, gap in 0.0..2.0f64, shift in -1.0..1.0f64, u in -2.0..2.0f64) {
        let m = make_halfplane(1.0).unwrap();
        let x = Point::planar(u, 0.0);
        let l = s - gap;
        let a = measures::separated_count(&m, &x, s, l).unwrap().count;
        let b = measures::separated_count(&m, &x, s + shift, l + shift).unwrap().count;
        prop_assert_eq!(a, b);
        // One-dimensional closed-ball nets: floor(2 e^{s-l}) + 1 points.
        prop_assert_eq!(a, (2.0 * gap.exp() + 1e-9).floor() as u64 + 1);
    }

    #[test]
    fn counts_are_flow_invariant_on_diagonal(s in 0.5..2.5f64, tau in -2.0..2.0f64) {
        let m = make_diagonal(&[1.0, 1.5]).unwrap();
        let x = Point::new(vec![0.2, -0.4], 0.0);
        let a = measures::separated_count(&m, &x, s, 0.0).unwrap().count;
        let b = measures::separated_count(&m, &flow(&m, &x, tau), s, 0.0).unwrap().count;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gromov_product_is_below_both_heights(u in -4.0..4.0f64, v in -4.0..4.0f64, s in -3.0..3.0f64, t in -3.0..3.0f64) {
        let m = make_halfplane(1.0).unwrap();
        let (x, y) = (Point::planar(u, s), Point::planar(v, t));
        let g = gromov::gromov_product_b(&m, &x, &y).unwrap();
        prop_assert!(g <= s.min(t) + 1e-12);
        let g2 = gromov::gromov_product_b(&m, &y, &x).unwrap();
        prop_assert!((g - g2).abs() <= 1e-12);
    }

    #[test]
    fn halfplane_distance_triangle(p in prop::array::uniform6(-3.0..3.0f64)) {
        let (x, y, z) = (Point::planar(p[0], p[1]), Point::planar(p[2], p[3]), Point::planar(p[4], p[5]));
        let d = |a: &Point, b: &Point| halfplane::distance(1.0, a, b);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
        let db = |a: &Point, b: &Point| uniformize::d_b(&make_halfplane(1.0).unwrap(), a, b).unwrap().value;
        prop_assert!(db(&x, &z) <= db(&x, &y) + db(&y, &z) + 1e-12);
    }

    #[test]
    fn cell_overlaps_tile_an_ellipse(cx in -1.0..1.0f64, cy in -1.0..1.0f64, sx in 0.1..2.0f64, sy in 0.1..2.0f64, n in 1usize..7) {
        let set = LeafSet::Ellipsoid { center: vec![cx, cy], semi_axes: vec![sx, sy] };
        let (lo, hi) = set.bounding_box();
        let (dx, dy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let cell = Cell {
                    lo: vec![lo[0] + i as f64 * dx, lo[1] + j as f64 * dy],
                    hi: vec![lo[0] + (i + 1) as f64 * dx, lo[1] + (j + 1) as f64 * dy],
                };
                let o = measures::cell_overlap(&cell, &set).unwrap();
                prop_assert!(o >= -1e-12 && o <= dx * dy * (1.0 + 1e-9));
                total += o;
            }
        }
        prop_assert!((total - set.lebesgue()).abs() <= 1e-9 * set.lebesgue());
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn renormalized_masses_sum_to_e_sigma_l(v in 0.1..1.5f64, l in 0.0..1.5f64, cells in 4usize..64) {
        let m = make_halfplane(1.0).unwrap();
        let sigma = m.entropy() + v;
        let r = measures::ps_renormalize(&m, &Point::planar(0.0, 0.0), sigma, l, cells).unwrap();
        let sum: f64 = r.masses.iter().sum();
        let target = (sigma * l).exp();
        prop_assert!((sum - target).abs() <= 1e-9 * target + r.abs_error, "{} vs {}", sum, target);
        prop_assert!(r.masses.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn warped_geodesics_satisfy_quadratic_convexity(u in -2.0..2.0f64, v in -2.0..2.0f64, s in -1.5..1.5f64, t in -1.5..1.5f64) {
        prop_assume!((u - v).abs() + (s - t).abs() > 0.05);
        let m = make_warped(0.1, 1.0, 1.0).unwrap();
        let path = geometry::geodesic_connect(&m, &Point::planar(u, s), &Point::planar(v, t), 1e-9).unwrap();
        let h = geometry::height_profile(&path, m.a, 1e-3).unwrap();
        prop_assert_eq!(h.quadratic_violations, 0, "margin {}", h.quadratic_margin);
    }
}
