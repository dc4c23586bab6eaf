//! Maximal operators over a finite ball family.
//!
//! Suprema over all balls are replaced by maxima over a [`BallFamily`]. The
//! fast kernels precompute each ball's node set once ([`CompiledFamily`]),
//! evaluate one value per ball (or per ball and member for the commutator) and
//! scatter the maximum onto member nodes. Node sums always run in ascending
//! index order, so the [`oracle`] reproduces every output bit for bit.

mod family;
mod kernel;
mod ops;
pub mod oracle;

pub use family::{
    box_diameter, companion_ball, BallFamily, CompiledFamily, FamilyParams, RadiusSequence,
};
pub use ops::{
    commutator_maximal, commutator_sharp, fractional_maximal, local_maximal, maximal_commutator,
    pwslip_constant, sharp_maximal, Operator, OperatorParams,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::field::{average_over, GridSpec, RegionMask, SampledField};
    use crate::geometry::{Ball, GroupSpec};
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    fn grid(group: GroupSpec, half: &[f64], n: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::centered(group, half, n).unwrap())
    }

    fn line(n: usize) -> Arc<GridSpec> {
        grid(GroupSpec::euclidean(1).unwrap(), &[1.0], n)
    }

    fn family(g: &Arc<GridSpec>, stride: usize, r_max: f64) -> BallFamily {
        let params = FamilyParams {
            centers_stride: stride,
            r_max: Some(r_max),
            cover: true,
            ..FamilyParams::default()
        };
        BallFamily::generate(g, &params).unwrap()
    }

    fn random(g: &Arc<GridSpec>, seed: u64, name: &str, lo: f64, hi: f64) -> SampledField {
        let mut r = rng::stream(seed, name);
        let v = (0..g.node_count())
            .map(|_| r.random_range(lo..hi))
            .collect();
        SampledField::from_values(g.clone(), v).unwrap()
    }

    fn assert_bitwise(a: &SampledField, b: &SampledField) {
        for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
            assert_eq!(x.to_bits(), y.to_bits(), "node {i}: {x} vs {y}");
        }
    }

    #[test]
    fn generated_family_shape() {
        let g = line(65);
        let fam = family(&g, 8, 0.25);
        assert_eq!(fam.radii.r_min, 2.0 / 32.0);
        assert_eq!(fam.radii.count, 5);
        assert_eq!(fam.len(), 9 * 5 + 1);
        assert!(fam.cover().is_some());
        let compiled = fam.compile(&g).unwrap();
        assert_eq!(compiled.first_uncovered(), None);
        let last = compiled.len() - 1;
        assert_eq!(compiled.count(last), 65);
    }

    #[test]
    fn members_match_full_scan() {
        let g = grid(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 9);
        let fam = family(&g, 2, 1.5).compile(&g).unwrap();
        for (k, ball) in fam.balls().iter().enumerate() {
            let full: Vec<u32> = (0..g.node_count())
                .filter(|&i| {
                    let p = crate::geometry::GroupPoint::new(g.node(i)).unwrap();
                    g.group.ball_contains(ball, &p).unwrap()
                })
                .map(|i| i as u32)
                .collect();
            assert_eq!(fam.members(k), full.as_slice(), "ball {ball}");
        }
    }

    #[test]
    fn oracle_equivalence_small_grids() {
        let cases = [
            (line(65), 8, 0.25),
            (
                grid(GroupSpec::euclidean(2).unwrap(), &[1.0, 1.0], 17),
                4,
                0.75,
            ),
            (grid(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 9), 4, 1.5),
        ];
        for (g, stride, r_max) in cases {
            let fam = family(&g, stride, r_max).compile(&g).unwrap();
            let b = random(&g, 1, "b", -1.0, 1.0);
            let f = random(&g, 2, "f", -1.0, 1.0);
            for op in Operator::ALL {
                for alpha in [0.0, 0.5] {
                    let fast = op.apply(Some(&b), &f, &fam, alpha).unwrap();
                    let slow = op.apply_oracle(Some(&b), &f, &fam, alpha).unwrap();
                    assert_bitwise(&fast, &slow);
                }
            }
        }
    }

    #[test]
    fn uncovered_nodes_are_reported() {
        let g = line(33);
        let fam = BallFamily::from_balls(vec![Ball::at(&[0.0], 0.2).unwrap()])
            .unwrap()
            .compile(&g)
            .unwrap();
        let f = SampledField::constant(&g, 1.0).unwrap();
        assert!(matches!(
            fractional_maximal(&f, &fam, 0.0),
            Err(Error::NodeUncovered { index: 0, .. })
        ));
        assert!(matches!(
            oracle::fractional_maximal(&f, fam.balls(), 0.0),
            Err(Error::NodeUncovered { index: 0, .. })
        ));
        assert!(matches!(
            fractional_maximal(&f, &fam, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn indicator_identities() {
        let g = grid(GroupSpec::euclidean(2).unwrap(), &[1.0, 1.0], 33);
        let b0 = Ball::at(&[0.125, -0.25], 0.4).unwrap();
        let fam = family(&g, 4, 1.0)
            .with_distinguished(b0.clone())
            .compile(&g)
            .unwrap();
        let mask = RegionMask::from_ball(&b0, &g).unwrap();
        let chi = SampledField::indicator(&mask);
        let m0 = mask.measure();
        for alpha in [0.0, 1.0, 1.5] {
            let out = fractional_maximal(&chi, &fam, alpha).unwrap();
            let expected = m0.powf(alpha / 2.0);
            for i in mask.indices() {
                assert!((out.values()[i] - expected).abs() <= 1e-12 * expected);
            }
        }
        let c = SampledField::constant(&g, 2.5).unwrap();
        let out = fractional_maximal(&c, &fam, 0.0).unwrap();
        assert!(out.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn sharp_examples() {
        let g = grid(GroupSpec::euclidean(2).unwrap(), &[1.0, 1.0], 65);
        let b0 = Ball::at(&[0.0, 0.0], 0.25).unwrap();
        let companion = Ball::at(&[0.0, 0.0], 0.25 * 2f64.sqrt()).unwrap();
        let fam = family(&g, 8, 0.5)
            .with_distinguished(b0.clone())
            .with_distinguished(companion)
            .compile(&g)
            .unwrap();
        let c = SampledField::constant(&g, -3.0).unwrap();
        assert!(sharp_maximal(&c, &fam)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let mask = RegionMask::from_ball(&b0, &g).unwrap();
        let chi = SampledField::indicator(&mask);
        let out = sharp_maximal(&chi, &fam).unwrap();
        for i in mask.indices() {
            let v = out.values()[i];
            assert!((0.45..=0.5).contains(&v), "node {i}: {v}");
        }

        let f = random(&g, 5, "f", -1.0, 1.0);
        let shifted = sharp_maximal(&f.add(&c).unwrap(), &fam).unwrap();
        let plain = sharp_maximal(&f, &fam).unwrap();
        for (a, b) in shifted.values().iter().zip(plain.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn companion_doubles_the_node_count() {
        let cases = [
            (line(257), vec![0.1], 0.05),
            (
                grid(GroupSpec::euclidean(2).unwrap(), &[1.0, 1.0], 65),
                vec![0.125, 0.0625],
                0.25,
            ),
            (
                grid(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 17),
                vec![0.0, 0.125, 0.25],
                0.5,
            ),
        ];
        for (g, c, r) in cases {
            let b0 = Ball::at(&c, r).unwrap();
            let base = g.ball_members(&b0);
            let comp = companion_ball(&g, &b0).unwrap();
            let members = g.ball_members(&comp);
            assert!(base.iter().all(|i| members.contains(i)));
            let miss = members.len().abs_diff(2 * base.len()) as f64;
            assert!(
                miss <= 0.02 * base.len() as f64,
                "{} vs {}",
                members.len(),
                2 * base.len()
            );

            let fam = family(&g, 8, 0.5)
                .with_distinguished(b0.clone())
                .with_distinguished(comp)
                .compile(&g)
                .unwrap();
            let mask = RegionMask::from_ball(&b0, &g).unwrap();
            let out = sharp_maximal(&SampledField::indicator(&mask), &fam).unwrap();
            for i in mask.indices() {
                let v = out.values()[i];
                assert!((0.4999..=0.5).contains(&v), "node {i}: {v}");
                if miss == 0.0 {
                    assert_eq!(v, 0.5);
                }
            }
        }
    }

    #[test]
    fn local_maximal_matches_restricted_global() {
        let g = grid(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 13);
        let b0 = Ball::at(&[0.0, 0.0, 0.0], 0.9).unwrap();
        // Concentric radii plus small balls deep inside b0: subset-closed over b0.
        let mut balls = Vec::new();
        for r in [0.3, 0.6, 0.9, 1.3, 2.0, 4.0] {
            balls.push(Ball::at(&[0.0, 0.0, 0.0], r).unwrap());
        }
        for c in [[0.3, 0.0, 0.0], [0.0, -0.3, 0.2], [0.2, 0.2, -0.3]] {
            balls.push(Ball::at(&c, 0.25).unwrap());
        }
        let fam = BallFamily::from_balls(balls)
            .unwrap()
            .with_distinguished(b0.clone());
        let compiled = fam.compile(&g).unwrap();
        let k0 = compiled.ball_index(&b0).unwrap();
        assert!(compiled.is_subset_closed_over(k0));

        let mask = RegionMask::from_ball(&b0, &g).unwrap();
        let f = random(&g, 9, "f", -2.0, 2.0);
        for alpha in [0.0, 1.0, 3.0] {
            let local = local_maximal(&f, &b0, &compiled, alpha).unwrap();
            let global =
                fractional_maximal(&f.restricted(&mask).unwrap(), &compiled, alpha).unwrap();
            for i in 0..g.node_count() {
                if mask.contains(i) {
                    assert_eq!(local.values()[i].to_bits(), global.values()[i].to_bits());
                } else {
                    assert_eq!(local.values()[i], 0.0);
                }
            }
        }
        // B0 competes: the local maximal dominates the ball average.
        let local = local_maximal(&f, &b0, &compiled, 0.0).unwrap();
        let avg = average_over(&f, &mask).unwrap().abs();
        assert!(mask.indices().all(|i| local.values()[i] >= avg - 1e-12));
    }

    #[test]
    fn commutator_examples() {
        let g = line(129);
        let b0 = Ball::at(&[0.1], 0.3).unwrap();
        let fam = family(&g, 4, 1.0)
            .with_distinguished(b0.clone())
            .compile(&g)
            .unwrap();
        let f = random(&g, 11, "f", 0.0, 1.0);
        let c = SampledField::constant(&g, 0.7).unwrap();
        for alpha in [0.0, 0.4] {
            let mb = maximal_commutator(&c, &f, &fam, alpha).unwrap();
            assert!(mb.values().iter().all(|&v| v == 0.0));
        }
        let comm = commutator_maximal(&c, &f, &fam, 0.0).unwrap();
        assert!(comm.values().iter().all(|v| v.abs() < 1e-12));
        let comm = commutator_sharp(&c, &f, &fam).unwrap();
        assert!(comm.values().iter().all(|v| v.abs() < 1e-12));

        let b = random(&g, 12, "b", -1.0, 1.0);
        let mask = RegionMask::from_ball(&b0, &g).unwrap();
        let chi = SampledField::indicator(&mask);
        let mb = maximal_commutator(&b, &chi, &fam, 0.0).unwrap();
        let mean = average_over(&b, &mask).unwrap();
        for i in mask.indices() {
            assert!((b.values()[i] - mean).abs() <= mb.values()[i] + 1e-12);
        }
    }

    #[test]
    fn dilation_covariance() {
        // Centered grid with odd node count: node 2i - c maps onto node 2(i - c) + c.
        let g = line(513);
        let fam = BallFamily::generate(
            &g,
            &FamilyParams {
                centers_stride: 1,
                r_max: Some(0.5),
                cover: true,
                ..FamilyParams::default()
            },
        )
        .unwrap()
        .compile(&g)
        .unwrap();
        let f = SampledField::sample(&g, |x| (-8.0 * x[0] * x[0]).exp()).unwrap();
        let fs = SampledField::sample(&g, |x| (-32.0 * x[0] * x[0]).exp()).unwrap();
        let center = 256;
        for alpha in [0.0, 0.5] {
            let mf = fractional_maximal(&f, &fam, alpha).unwrap();
            let mfs = fractional_maximal(&fs, &fam, alpha).unwrap();
            for i in (center - 64..=center + 64).step_by(8) {
                let j = 2 * i - center;
                let lhs = mfs.values()[i];
                let rhs = 2f64.powf(-alpha) * mf.values()[j];
                assert!(
                    (lhs - rhs).abs() <= 0.05 * rhs,
                    "alpha={alpha} node {i}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn pwslip_constant_is_positive() {
        let g = line(65);
        let fam = family(&g, 8, 0.5).compile(&g).unwrap();
        let c = pwslip_constant(1.0, 0.5, &fam).unwrap();
        assert!(c > 0.0 && c.is_finite());
        let h = grid(GroupSpec::heisenberg(), &[1.0, 1.0, 2.0], 5);
        let fam = family(&h, 2, 1.0).compile(&h).unwrap();
        assert!(matches!(
            pwslip_constant(1.0, 0.5, &fam),
            Err(Error::Uncalibrated(_))
        ));
    }

    #[test]
    fn operator_names_round_trip() {
        for op in Operator::ALL {
            assert_eq!(op.name().parse::<Operator>().unwrap(), op);
        }
        assert!("maximal".parse::<Operator>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sublinear_and_monotone(
            fv in prop::collection::vec(-3.0f64..3.0, 33),
            gv in prop::collection::vec(-3.0f64..3.0, 33),
            c in -4.0f64..4.0,
            alpha in 0.0f64..0.9,
        ) {
            let g = line(33);
            let fam = family(&g, 2, 0.5).compile(&g).unwrap();
            let f = SampledField::from_values(g.clone(), fv).unwrap();
            let h = SampledField::from_values(g.clone(), gv).unwrap();
            let mf = fractional_maximal(&f, &fam, alpha).unwrap();
            let mh = fractional_maximal(&h, &fam, alpha).unwrap();
            let msum = fractional_maximal(&f.add(&h).unwrap(), &fam, alpha).unwrap();
            let mscaled = fractional_maximal(&f.scale(c), &fam, alpha).unwrap();
            let dominating = f.abs().add(&h.abs()).unwrap();
            let mdom = fractional_maximal(&dominating, &fam, alpha).unwrap();
            for i in 0..33 {
                let tol = 1e-12 * (1.0 + mf.values()[i] + mh.values()[i]);
                prop_assert!(msum.values()[i] <= mf.values()[i] + mh.values()[i] + tol);
                prop_assert!((mscaled.values()[i] - c.abs() * mf.values()[i]).abs() <= 1e-12 * (1.0 + mscaled.values()[i]));
                prop_assert!(mf.values()[i] <= mdom.values()[i] + tol);
            }
        }
    }
}
