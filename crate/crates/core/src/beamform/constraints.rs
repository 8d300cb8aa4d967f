use super::{BeamWeights, BeamformError};
use crate::numerics::{hermitian_evd, CMat, CVec, Cplx};
use crate::sigmodel::{steering_vector, ArrayGeometry, Scenario, SnapshotMatrix};

/// Eigenvalues below this fraction of the largest count as "dropped" (20 dB).
pub const DEFAULT_DROP_RATIO: f64 = 0.01;

/// Linear constraints WᴴC = gᴴ with g = [1, 0, …, 0]: unit gain on the first
/// column, zero gain on the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub c: CMat,
    pub g: CVec,
}

impl ConstraintSet {
    pub fn new(c: CMat) -> Result<Self, BeamformError> {
        if c.cols() == 0 {
            return Err(BeamformError::DimensionMismatch("no constraint columns".into()));
        }
        if c.cols() > c.rows() {
            return Err(BeamformError::TooManyConstraints {
                needed: c.cols(),
                available: c.rows(),
            });
        }
        let g = CVec::from_fn(c.cols(), |j| Cplx::new(if j == 0 { 1.0 } else { 0.0 }, 0.0));
        Ok(ConstraintSet { c, g })
    }

    pub fn desired_only(steering_d: CVec) -> Self {
        Self::new(CMat::from_columns(&[steering_d])).expect("one column")
    }

    pub fn len(&self) -> usize {
        self.c.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.c.cols() == 0
    }

    /// ‖WᴴC − gᴴ‖_∞
    pub fn residual(&self, w: &BeamWeights) -> f64 {
        (0..self.c.cols())
            .map(|j| (w.response(&self.c.column(j)) - self.g[j].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Outcome of the eigenvalue-drop rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSelection {
    /// Total constraint count: the desired column plus `n_m − 1` eigenvectors.
    pub n_m: usize,
    pub drop_ratio: f64,
    /// Candidate interference-subspace eigenvalues, descending. The first
    /// `n_m − 1` are at least `drop_ratio·eigenvalues[0]`; the next is below.
    pub eigenvalues: Vec<f64>,
}

impl SubspaceSelection {
    pub fn n_interference(&self) -> usize {
        self.n_m - 1
    }
}

/// C = [a(θ_d), a(θ_1), …, a(θ_L)] from the scenario's known angles.
pub fn build_constraints_oracle(
    geometry: &ArrayGeometry,
    scenario: &Scenario,
) -> Result<ConstraintSet, BeamformError> {
    let needed = scenario.n_paths() + 1;
    if needed > geometry.n_antennas {
        return Err(BeamformError::TooManyConstraints {
            needed,
            available: geometry.n_antennas,
        });
    }
    let cols: Vec<CVec> = std::iter::once(scenario.desired_angle_deg)
        .chain(scenario.int_angles_deg.iter().copied())
        .map(|a| steering_vector(geometry, a))
        .collect();
    ConstraintSet::new(CMat::from_columns(&cols))
}

/// Constraint set from the dominant eigenvectors of the received covariance.
///
/// With `desired_reference` (the known transmitted symbols of these
/// snapshots, e.g. pilots) the desired term a(θ_d)·s_t is subtracted before
/// the covariance is formed, so its eigenvectors span the interference
/// directions themselves. Without it, the desired direction is projected out
/// (A′ = P·A·P, P = I − a·aᴴ/‖a‖²) and the eigenvectors span only the
/// components of the interference orthogonal to a(θ_d).
///
/// Eigenvalues are scanned in descending order; the leading run that stays
/// at or above `drop_ratio·λ_max` becomes the interference subspace.
pub fn build_constraints_evd(
    snapshots: &SnapshotMatrix,
    steering_d: &CVec,
    drop_ratio: f64,
    desired_reference: Option<&[Cplx]>,
) -> Result<(ConstraintSet, SubspaceSelection), BeamformError> {
    let n = snapshots.n_antennas();
    if steering_d.len() != n {
        return Err(BeamformError::DimensionMismatch(format!(
            "{} antennas, steering vector of length {}",
            n,
            steering_d.len()
        )));
    }
    if snapshots.n_symbols() < n {
        return Err(BeamformError::TooFewSnapshots {
            got: snapshots.n_symbols(),
            need: n,
        });
    }

    let (cov, candidates) = match desired_reference {
        Some(reference) => {
            if reference.len() != snapshots.n_symbols() {
                return Err(BeamformError::DimensionMismatch(format!(
                    "{} snapshots, {} reference symbols",
                    snapshots.n_symbols(),
                    reference.len()
                )));
            }
            let mut residual = snapshots.clone();
            for (t, &s) in reference.iter().enumerate() {
                for (x, a) in residual.column_mut(t).iter_mut().zip(steering_d.iter()) {
                    *x -= a * s;
                }
            }
            (residual.sample_covariance(), n)
        }
        None => {
            let p = CMat::identity(n).sub(&CMat::outer(steering_d, steering_d).scale_re(1.0 / steering_d.norm_sqr()));
            let a = snapshots.sample_covariance();
            // The projected-out direction always contributes a zero eigenvalue.
            (p.matmul(&a).matmul(&p), n - 1)
        }
    };
    let evd = hermitian_evd(&cov).map_err(BeamformError::SingularCovariance)?;
    let eigenvalues: Vec<f64> = evd.eigenvalues[..candidates].to_vec();
    let lambda_max = eigenvalues[0];
    let kept = if lambda_max > 0.0 {
        eigenvalues.iter().take_while(|&&l| l >= drop_ratio * lambda_max).count()
    } else {
        0
    };
    if kept == candidates {
        return Err(BeamformError::NoSharpDrop {
            drop_ratio,
            eigenvalues,
        });
    }
    let cols: Vec<CVec> = std::iter::once(steering_d.clone())
        .chain((0..kept).map(|j| evd.eigenvectors.column(j)))
        .collect();
    let set = ConstraintSet::new(CMat::from_columns(&cols))?;
    Ok((
        set,
        SubspaceSelection {
            n_m: kept + 1,
            drop_ratio,
            eigenvalues,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{beam_pattern, lcmv_weights, BeamMethod};
    use crate::numerics::Cplx;
    use crate::sigmodel::{preset, random_symbols, synthesize_with, Components};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn epa() -> (Scenario, ArrayGeometry) {
        let f = preset("epa").unwrap();
        (f.scenario, f.array)
    }

    #[test]
    fn oracle_epa_shape() {
        let (s, g) = epa();
        let cs = build_constraints_oracle(&g, &s).unwrap();
        assert_eq!(cs.len(), 5);
        assert_eq!(cs.g[0], Cplx::new(1.0, 0.0));
        assert!(cs.g.iter().skip(1).all(|&z| z == Cplx::new(0.0, 0.0)));
        assert!(cs.c.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert_eq!(cs.c.column(0), steering_vector(&g, 30.0));
    }

    #[test]
    fn oracle_without_interference() {
        let (s, g) = epa();
        let cs = build_constraints_oracle(&g, &s.without_interference()).unwrap();
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn oracle_rejects_overfull() {
        let (mut s, _) = epa();
        let g = ArrayGeometry::new(4, 0.5).unwrap();
        assert_eq!(
            build_constraints_oracle(&g, &s),
            Err(BeamformError::TooManyConstraints { needed: 5, available: 4 })
        );
        s.int_angles_deg.truncate(3);
        s.int_powers_db.truncate(3);
        s.path_delays_symbols.truncate(3);
        assert!(build_constraints_oracle(&g, &s).is_ok());
    }

    fn interference_only(s: &Scenario, g: &ArrayGeometry, t: usize, noise: bool, seed: u64) -> SnapshotMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let si = random_symbols(&mut rng, t + s.max_delay());
        let zeros = vec![Cplx::new(0.0, 0.0); t];
        let parts = Components {
            desired: false,
            interference: true,
            noise,
        };
        synthesize_with(s, g, &zeros, &si.symbols, parts, &mut rng).unwrap()
    }

    #[test]
    fn rank_one_interferer_recovered() {
        let g = ArrayGeometry::default();
        // sin θ_int − sin θ_d = 0.4 puts a(θ_int) orthogonal to a(θ_d) for N = 10.
        let int_angle = 0.9f64.asin().to_degrees();
        let s = Scenario {
            label: "one".into(),
            desired_angle_deg: 30.0,
            int_angles_deg: vec![int_angle],
            int_powers_db: vec![0.0],
            path_delays_symbols: vec![0],
            noise_power_db: 0.0,
        };
        let x = interference_only(&s, &g, 200, false, 1);
        let a_d = steering_vector(&g, 30.0);
        let a_i = steering_vector(&g, int_angle);
        assert!(a_d.dot(&a_i).norm() < 1e-12);
        for reference in [None, Some(vec![Cplx::new(0.0, 0.0); 200])] {
            let (cs, sel) = build_constraints_evd(&x, &a_d, DEFAULT_DROP_RATIO, reference.as_deref()).unwrap();
            assert_eq!(sel.n_interference(), 1);
            let q = cs.c.column(1);
            // unit-norm q ∝ a_i  ⇒  |⟨q, a_i⟩| = ‖a_i‖
            assert!((q.dot(&a_i).norm() - 10f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn projected_mode_spans_orthogonal_part() {
        let g = ArrayGeometry::default();
        let s = Scenario {
            label: "one".into(),
            desired_angle_deg: 30.0,
            int_angles_deg: vec![-40.0],
            int_powers_db: vec![0.0],
            path_delays_symbols: vec![0],
            noise_power_db: 0.0,
        };
        let x = interference_only(&s, &g, 100, false, 2);
        let a_d = steering_vector(&g, 30.0);
        let a_i = steering_vector(&g, -40.0);
        let (cs, _) = build_constraints_evd(&x, &a_d, DEFAULT_DROP_RATIO, None).unwrap();
        let proj = a_d.dot(&a_i) / 10.0;
        let pa = CVec::from_fn(10, |k| a_i[k] - a_d[k] * proj);
        let q = cs.c.column(1);
        assert!((q.dot(&pa).norm() - pa.norm()).abs() < 1e-9 * pa.norm());
    }

    #[test]
    fn white_noise_has_no_sharp_drop() {
        let (s, g) = epa();
        let quiet = s.without_interference().with_noise_db(0.0);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let zeros = vec![Cplx::new(0.0, 0.0); 5000];
        let parts = Components {
            desired: false,
            interference: false,
            noise: true,
        };
        let x = synthesize_with(&quiet, &g, &zeros, &[], parts, &mut rng).unwrap();
        let a_d = steering_vector(&g, 30.0);
        for reference in [None, Some(zeros.as_slice())] {
            let r = build_constraints_evd(&x, &a_d, 0.01, reference);
            assert!(matches!(r, Err(BeamformError::NoSharpDrop { .. })));
        }
    }

    #[test]
    fn too_few_snapshots() {
        let (s, g) = epa();
        let x = interference_only(&s, &g, 5, true, 4);
        assert_eq!(
            build_constraints_evd(&x, &steering_vector(&g, 30.0), 0.01, None).map(|_| ()),
            Err(BeamformError::TooFewSnapshots { got: 5, need: 10 })
        );
    }

    #[test]
    fn selection_invariant_holds() {
        let (s, g) = epa();
        let x = interference_only(&s.with_noise_db(-30.0), &g, 2000, true, 5);
        let zeros = vec![Cplx::new(0.0, 0.0); 2000];
        let (_, sel) = build_constraints_evd(&x, &steering_vector(&g, 30.0), 0.01, Some(&zeros)).unwrap();
        let k = sel.n_interference();
        assert_eq!(k, 4);
        let l = &sel.eigenvalues;
        assert!(l[k - 1] >= 0.01 * l[0] && 0.01 * l[0] > l[k]);
    }

    /// Full pipeline on EPA at −30 dB noise with the desired user present.
    /// Oracle nulls are exact, so "matching" them means deep nulls (≤ −60 dB,
    /// far below the −30 dB noise floor) and an output SINR within 5 dB.
    #[test]
    fn evd_nulls_track_oracle_nulls() {
        let (s, g) = epa();
        let s = s.with_noise_db(-30.0);
        let t = 10_000;
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let d = random_symbols(&mut rng, t);
        let si = random_symbols(&mut rng, t + s.max_delay());
        let x = synthesize_with(&s, &g, &d.symbols, &si.symbols, Components::ALL, &mut rng).unwrap();
        let a_d = steering_vector(&g, 30.0);
        let (cs, sel) = build_constraints_evd(&x, &a_d, DEFAULT_DROP_RATIO, Some(&d.symbols)).unwrap();
        assert_eq!(sel.n_m, 5);
        let w_evd = lcmv_weights(&x.sample_covariance(), &cs, BeamMethod::LcmvEvd).unwrap();
        let oracle = build_constraints_oracle(&g, &s).unwrap();
        let w_or = lcmv_weights(&crate::sigmodel::analytic_covariance(&s, &g), &oracle, BeamMethod::LcmvOracle).unwrap();
        let p_evd = beam_pattern(&w_evd, &g, &s.int_angles_deg);
        for (e, angle) in p_evd.iter().zip(&s.int_angles_deg) {
            assert!(*e <= -60.0, "{angle}: evd null only {e} dB");
        }
        let gap_db = 10.0 * (w_or.sinr(&s, &g) / w_evd.sinr(&s, &g)).log10();
        assert!(gap_db.abs() <= 5.0, "SINR gap {gap_db} dB");
        assert!(cs.residual(&w_evd) < 1e-9);
    }
}
