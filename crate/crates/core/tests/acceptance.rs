//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use polaron_core::densities::{
    convergence_report, husimi_density, husimi_disc_mass, husimi_marginal, moment, multiplication, non_decreasing,
    standard_probes, strictly_decreasing, ConvergenceRow, HusimiSpec, MomentRequest, SweepEntry,
};
use polaron_core::fock::{
    coherent_from_amplitudes, ground_state, ladder_operators, FockBasis, Hamiltonian, LanczosOptions, ModeSet,
};
use polaron_core::localization::{
    complement, compress_to_modes, doubling_isometry, verify_localization_identities, PartitionOfUnity, Profile,
    DEFAULT_CAPACITY,
};
use polaron_core::pekar::{
    binding_gap, effective_potential, field_configuration, minimize, minimize_mixed, pekar_energy, pekar_gradient,
    product_energy, MinimizeOptions, PekarProblem,
};
use polaron_core::profiles::{cosine_packet, gaussian_coupling, gaussian_well, sample_problem, sweep_problem};
use polaron_core::sweep::{reference, run_alpha, AlphaRun, Reference};
use polaron_core::{Complex64, Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, budget: f64, secs: f64, o: &Outcome) -> bool {
    let pass = o.pass && secs < budget;
    println!(
        "criterion {id:>2} {:<4} {name}: {} [{secs:.2} s, budget {budget} s]",
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

/// Band-limited random field with a Gaussian envelope, normalized to one.
fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let coeffs: Vec<(f64, C)> = (-8i32..=8)
        .map(|k| {
            let q = 2.0 * PI * k as f64 / grid.length();
            (q, C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
        .collect();
    let c = grid.center();
    let f = Field::from_fn(grid, |x| {
        let env = (-(x - c).powi(2) / 18.0).exp();
        coeffs.iter().map(|(q, a)| a * C::from_polar(env, q * x)).sum()
    });
    f.scaled_real(1.0 / f.norm())
}

fn sample_grid() -> Grid {
    Grid::new(256, 32.0).unwrap()
}

fn square_completion() -> Outcome {
    let grid = sample_grid();
    let p = sample_problem(&grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let psi = random_field(&grid, &mut rng);
        let u = field_configuration(&psi, p.coupling()).unwrap();
        let a = product_energy(&psi, &u, &p).unwrap();
        let b = pekar_energy(&psi, &p).unwrap();
        worst = worst.max((a - b).abs() / (1.0 + b.abs()));
    }
    outcome(worst <= 1e-12, format!("max relative gap {worst:.2e} (tol 1e-12)"))
}

fn gradient_check() -> Outcome {
    let grid = sample_grid();
    let p = sample_problem(&grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let psi = random_field(&grid, &mut rng);
        let eta = random_field(&grid, &mut rng);
        let g = pekar_gradient(&psi, &p).unwrap();
        let fd = (pekar_energy(&psi.axpy(t, &eta), &p).unwrap() - pekar_energy(&psi.axpy(-t, &eta), &p).unwrap())
            / (2.0 * t);
        let an = eta.inner(&g).re;
        worst = worst.max((fd - an).abs() / an.abs());
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.2e} (tol 1e-6)"))
}

/// Direct-sum Fourier transform `h sum_x f(x) e^{-ikx}`.
fn fourier(f: &Field, k: f64) -> C {
    let grid = f.grid();
    (0..grid.n())
        .map(|i| f.values()[i] * C::from_polar(grid.spacing(), -k * grid.x(i)))
        .sum()
}

fn effective_potential_positivity() -> Outcome {
    let grid = sample_grid();
    let couplings = [
        ("gaussian", gaussian_coupling(&grid, 0.5, 1.0)),
        ("cosine-packet", cosine_packet(&grid, 0.5, 1.0, 2.0)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, v) in &couplings {
        let w = effective_potential(v).unwrap();
        let min = (0..grid.n())
            .map(|j| fourier(&w, grid.wavenumber(j)).re)
            .fold(f64::INFINITY, f64::min);
        pass &= min >= -1e-12;
        parts.push(format!("{name} min W^ {min:.2e}"));
    }
    outcome(pass, parts.join(", "))
}

/// `-Delta + V` from an explicit DFT-matrix Laplacian.
fn dense_linear_operator(p: &PekarProblem) -> DMatrix<C> {
    let grid = p.grid();
    let n = grid.n();
    DMatrix::from_fn(n, n, |a, c| {
        let mut s: C = (0..n)
            .map(|j| {
                let q = grid.wavenumber(j);
                C::from_polar(q * q / n as f64, q * (grid.x(a) - grid.x(c)))
            })
            .sum();
        if a == c {
            s += p.potential().values()[a];
        }
        s
    })
}

fn lowest_eigenvalue(m: &DMatrix<C>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

fn decoupled_limit() -> Outcome {
    let grid = sample_grid();
    let p = sample_problem(&grid).unwrap().with_coupling(Field::zeros(&grid)).unwrap();
    let lambda = lowest_eigenvalue(&dense_linear_operator(&p));
    let r = minimize(&p, &MinimizeOptions::default()).unwrap();
    let energy_gap = (r.energy - lambda).abs();
    let modes = ModeSet::lowest(&grid, 3).unwrap();
    let basis = FockBasis::new(3, 3).unwrap();
    let h = Hamiltonian::new(&p, &modes, &basis, 1.0).unwrap();
    let gs = ground_state(&h, &LanczosOptions::default(), None).unwrap();
    let vac = basis.index_of(&[0, 0, 0]).unwrap();
    let weight: f64 = (0..grid.n())
        .map(|x| gs.state.coefficient(x, vac).norm_sqr())
        .sum::<f64>()
        * grid.spacing();
    outcome(
        energy_gap <= 1e-8 && weight >= 1.0 - 1e-10,
        format!("|E - lambda_min| {energy_gap:.2e} (tol 1e-8), vacuum weight 1 - {:.2e}", 1.0 - weight),
    )
}

/// Unscaled creation matrix of mode `j`, built from the occupation tables.
fn creation(basis: &FockBasis, j: usize) -> DMatrix<C> {
    let d = basis.dim();
    let mut m = DMatrix::zeros(d, d);
    for s in 0..d {
        let mut occ = basis.occupation(s).to_vec();
        occ[j] += 1;
        if let Some(t) = basis.index_of(&occ) {
            m[(t, s)] = C::new((occ[j] as f64).sqrt(), 0.0);
        }
    }
    m
}

/// Kronecker-product assembly of the composite Hamiltonian with mode amplitudes of
/// `v` taken by direct quadrature.
fn dense_hamiltonian(p: &PekarProblem, modes: &ModeSet, basis: &FockBasis, alpha: f64) -> DMatrix<C> {
    let grid = p.grid();
    let n = grid.n();
    let d = basis.dim();
    let l = grid.length();
    let mut h = dense_linear_operator(p).kronecker(&DMatrix::<C>::identity(d, d));
    let number = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C::new(basis.total(r) as f64 / (alpha * alpha), 0.0)
        } else {
            C::default()
        }
    });
    h += DMatrix::<C>::identity(n, n).kronecker(&number);
    for (j, &q) in modes.indices().iter().enumerate() {
        let kj = 2.0 * PI * q as f64 / l;
        let vj = fourier(p.coupling(), kj) / l.sqrt();
        let phase = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C::from_polar(1.0, -kj * grid.x(r)) * vj.conj()
            } else {
                C::default()
            }
        });
        let term = phase.kronecker(&(creation(basis, j) / C::new(alpha, 0.0)));
        h += &term + term.adjoint();
    }
    h
}

/// `sqrt(k! l!) <v, A (x) adag(g) ... a(f) v>` by dense matrices, `v` unit in l2.
fn dense_moment(v: &DVector<C>, req: &MomentRequest, basis: &FockBasis, alpha: f64) -> C {
    let d = basis.dim();
    let mut field = DMatrix::<C>::identity(d, d);
    let scale = |f: &[C], adjoint: bool| -> DMatrix<C> {
        let mut m = DMatrix::zeros(d, d);
        for (j, c) in f.iter().enumerate() {
            let a = creation(basis, j) / C::new(alpha, 0.0);
            if adjoint {
                m += a * *c;
            } else {
                m += a.adjoint() * c.conj();
            }
        }
        m
    };
    for g in &req.create {
        field = field * scale(g, true);
    }
    for f in &req.annihilate {
        field = field * scale(f, false);
    }
    let (k, l) = req.order();
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let op = req.observable.kronecker(&field);
    (v.adjoint() * op * v)[(0, 0)] * (fact(k) * fact(l)).sqrt()
}

fn dense_oracle_equivalence() -> Outcome {
    let instances = [
        (8, 1, 4, 1.0),
        (8, 3, 4, 1.3),
        (16, 1, 6, 0.7),
        (16, 3, 5, 1.0),
        (32, 3, 4, 1.5),
    ];
    let opts = LanczosOptions {
        tol: 1e-12,
        ..LanczosOptions::default()
    };
    let mut worst_e = 0.0f64;
    let mut worst_m = 0.0f64;
    for &(n, m, n_tot, alpha) in &instances {
        let grid = Grid::new(n, 8.0).unwrap();
        let p = PekarProblem::new(
            gaussian_well(&grid, 1.0, 0.8, grid.center()),
            gaussian_coupling(&grid, 0.6, 1.0),
            1.0,
        )
        .unwrap();
        let modes = ModeSet::lowest(&grid, m).unwrap();
        let basis = FockBasis::new(m, n_tot).unwrap();
        assert!(n * basis.dim() <= 2000);
        let dense = dense_hamiltonian(&p, &modes, &basis, alpha);
        let eig = dense.clone().symmetric_eigen();
        let i0 = eig.eigenvalues.imin();
        let v = eig.eigenvectors.column(i0).into_owned();
        let h = Hamiltonian::new(&p, &modes, &basis, alpha).unwrap();
        let gs = ground_state(&h, &opts, None).unwrap();
        worst_e = worst_e.max((gs.energy - eig.eigenvalues[i0]).abs());

        let window = Field::from_real_fn(&grid, |x| if (x - grid.center()).abs() < 2.0 { 1.0 } else { 0.0 });
        let mut e0 = vec![C::default(); m];
        e0[0] = C::new(1.0, 0.0);
        let mut last = vec![C::default(); m];
        last[m - 1] = C::new(0.6, -0.8);
        let id = DMatrix::identity(n, n);
        let requests = [
            MomentRequest::particle(multiplication(&window)),
            MomentRequest {
                observable: id.clone(),
                annihilate: vec![e0.clone()],
                create: vec![],
                allow_higher: false,
            },
            MomentRequest {
                observable: multiplication(&window),
                annihilate: vec![last.clone()],
                create: vec![e0.clone()],
                allow_higher: false,
            },
            MomentRequest {
                observable: id,
                annihilate: vec![e0.clone(), last],
                create: vec![],
                allow_higher: false,
            },
        ];
        for req in &requests {
            let a = moment(&gs.state, req, &basis).unwrap();
            let b = dense_moment(&v, req, &basis, alpha);
            worst_m = worst_m.max((a - b).norm());
        }
    }
    outcome(
        worst_e <= 1e-10 && worst_m <= 1e-12,
        format!(
            "{} instances, max energy error {worst_e:.2e} (tol 1e-10), max moment error {worst_m:.2e} (tol 1e-12)",
            instances.len()
        ),
    )
}

struct Sweep {
    reference: Reference,
    runs: Vec<AlphaRun>,
    rows_inner: Vec<ConvergenceRow>,
    rows_outer: Vec<ConvergenceRow>,
}

fn sweep() -> Sweep {
    let grid = Grid::new(64, 16.0).unwrap();
    let p = sweep_problem(&grid).unwrap();
    let modes = ModeSet::lowest(&grid, 3).unwrap();
    let reference = reference(&p, &modes, &MinimizeOptions::default()).unwrap();
    let runs: Vec<AlphaRun> = [1.0, SQRT_2, 2.0, 2.0 * SQRT_2]
        .iter()
        .map(|&a| run_alpha(&reference, a, 4.0, &LanczosOptions::default(), 1_000_000).unwrap())
        .collect();
    let entries: Vec<SweepEntry> = runs
        .iter()
        .map(|r| SweepEntry {
            alpha: r.alpha,
            state: &r.ground.state,
            basis: &r.basis,
        })
        .collect();
    let l = grid.length();
    let inner = PartitionOfUnity::new(&grid, grid.center(), l / 8.0, Profile::default()).unwrap();
    let outer = PartitionOfUnity::new(&grid, grid.center(), l / 4.0, Profile::default()).unwrap();
    let probes = standard_probes(&grid, &modes, &inner.chi).unwrap();
    let rows_inner = convergence_report(&entries, &reference.result, &modes, &probes, &inner.chi).unwrap();
    let rows_outer = convergence_report(&entries, &reference.result, &modes, &probes, &outer.chi).unwrap();
    Sweep {
        reference,
        runs,
        rows_inner,
        rows_outer,
    }
}

fn fmt(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}

fn energy_convergence(s: &Sweep) -> Outcome {
    let e_pek = s.reference.result.energy;
    let gaps: Vec<f64> = s.runs.iter().map(|r| (r.ground.energy - e_pek).abs()).collect();
    let bound = s.runs.iter().all(|r| r.ground.energy <= r.trial_energy + 1e-8);
    outcome(
        bound && strictly_decreasing(&gaps),
        format!("variational bound {bound}, |E_alpha - E_Pek| = [{}]", fmt(&gaps)),
    )
}

fn state_convergence(s: &Sweep) -> Outcome {
    let td: Vec<f64> = s.rows_inner.iter().map(|r| r.trace_distance).collect();
    let mut pass = strictly_decreasing(&td) && td[td.len() - 1] <= 0.5 * td[0];
    let mut parts = vec![format!("trace distance [{}]", fmt(&td))];
    for k in 0..s.rows_inner[0].moment_errors.len() {
        let errs: Vec<f64> = s.rows_inner.iter().map(|r| r.moment_errors[k]).collect();
        pass &= strictly_decreasing(&errs);
        parts.push(format!("probe {k} [{}]", fmt(&errs)));
    }
    outcome(pass, parts.join("; "))
}

fn mass_concentration(s: &Sweep) -> Outcome {
    let inner: Vec<f64> = s.rows_inner.iter().map(|r| r.mass_in_window).collect();
    let outer: Vec<f64> = s.rows_outer.iter().map(|r| r.mass_in_window).collect();
    let last = outer[outer.len() - 1];
    outcome(
        non_decreasing(&inner) && non_decreasing(&outer) && last >= 0.95,
        format!("R = L/8 [{}], R = L/4 [{}]", fmt(&inner), fmt(&outer)),
    )
}

fn husimi_concentration(s: &Sweep) -> Outcome {
    let modes = &s.reference.modes;
    let j = modes.position(1).unwrap();
    let predicted = modes.amplitudes(&s.reference.result.u_psi)[j];
    let masses: Vec<f64> = s
        .runs
        .iter()
        .map(|r| {
            let spec = HusimiSpec::around(predicted, r.alpha);
            husimi_marginal(&r.ground.state, &r.basis, j, &spec)
                .unwrap()
                .mass_near_prediction
        })
        .collect();
    let growth = strictly_decreasing(&masses.iter().map(|m| -m).collect::<Vec<_>>());

    // Closed-form oracles: vacuum at alpha = 1 and a coherent state at alpha = 2.
    let one_mode = FockBasis::new(1, 60).unwrap();
    let mut vacuum = DMatrix::zeros(61, 61);
    vacuum[(0, 0)] = C::new(1.0, 0.0);
    let z0 = C::new(0.8, -0.3);
    let xi = coherent_from_amplitudes(&[z0], &one_mode, 2.0).unwrap().vector;
    let coherent = DMatrix::from_fn(61, 61, |a, b| xi[a] * xi[b].conj());
    let mut oracle_err = 0.0f64;
    for (rho, alpha, center) in [(&vacuum, 1.0, C::default()), (&coherent, 2.0, z0)] {
        for a in -10..=10 {
            for b in -10..=10 {
                let u = center + C::new(a as f64, b as f64) * (0.3 / alpha);
                let exact = alpha * alpha / PI * (-(alpha * alpha) * (u - center).norm_sqr()).exp();
                oracle_err = oracle_err.max((husimi_density(rho, alpha, u) - exact).abs());
            }
        }
        for r in [1.0 / alpha, 3.0 / alpha] {
            let exact = 1.0 - (-(alpha * r).powi(2)).exp();
            oracle_err = oracle_err.max((husimi_disc_mass(rho, alpha, center, r, 48, 96) - exact).abs());
        }
    }
    outcome(
        growth && oracle_err <= 1e-6,
        format!(
            "1 - mass within 3/alpha [{}], oracle error {oracle_err:.2e} (tol 1e-6)",
            fmt(&masses.iter().map(|m| 1.0 - m).collect::<Vec<_>>())
        ),
    )
}

fn mixed_rank_one() -> Outcome {
    let grid = sample_grid();
    let p = sample_problem(&grid).unwrap();
    let opts = MinimizeOptions::default();
    let pure = minimize(&p, &opts).unwrap();
    let mixed = minimize_mixed(&p, 3, &opts).unwrap();
    let gap = (mixed.energy - pure.energy).abs();
    outcome(
        mixed.ratio <= 1e-6 && gap <= 1e-8,
        format!("lambda2/lambda1 {:.2e} (tol 1e-6), |E_mixed - E_pure| {gap:.2e} (tol 1e-8)", mixed.ratio),
    )
}

fn random_contraction(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let a = DMatrix::from_fn(m, m, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = (&a + a.adjoint()) * C::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let mapped = eig.eigenvalues.map(|v| C::new(0.05 + 0.9 * (v - lo) / (hi - lo), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&mapped) * eig.eigenvectors.adjoint()
}

fn sqrt_psd(q: &DMatrix<C>) -> DMatrix<C> {
    let eig = q.clone().symmetric_eigen();
    let s = eig.eigenvalues.map(|v| C::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&s) * eig.eigenvectors.adjoint()
}

fn localization_identities() -> Outcome {
    use polaron_core::densities::CompositeDensity;
    use polaron_core::fock::CompositeState;
    let grid = Grid::new(16, 8.0).unwrap();
    let modes = ModeSet::from_indices(&grid, vec![1, -1]).unwrap();
    let basis = FockBasis::new(2, 3).unwrap();
    let d = basis.dim();
    let partition = PartitionOfUnity::new(&grid, grid.center(), 1.5, Profile::default()).unwrap();
    let q_field = compress_to_modes(&partition.chi, &modes);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_identity = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for _ in 0..5 {
        let alpha = 1.0 + rng.random_range(0.0..1.0);
        let states: Vec<CompositeState> = (0..3)
            .map(|_| {
                let v = (0..grid.n() * d)
                    .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                CompositeState::from_vector(&grid, d, alpha, v).unwrap()
            })
            .collect();
        let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        w[2] = 1.0 - w[0] - w[1];
        let gamma = CompositeDensity::mixture(&states, &w).unwrap();
        let rep = verify_localization_identities(&gamma, &partition.chi, &q_field, &basis, DEFAULT_CAPACITY).unwrap();
        worst_identity = worst_identity
            .max(rep.particle)
            .max(rep.field)
            .max(rep.interaction)
            .max(rep.trace);
        min_eig = min_eig.min(rep.min_eigenvalue.unwrap_or(0.0));
    }

    // Isometry and intertwining for 3 random contractions.
    let adag: Vec<DMatrix<C>> = (0..2).map(|j| ladder_operators(&basis, j, 1.0).unwrap().1.to_dense()).collect();
    let mut worst_iso = 0.0f64;
    let mut worst_int = 0.0f64;
    for _ in 0..3 {
        let q = random_contraction(2, &mut rng);
        let s = sqrt_psd(&(DMatrix::identity(2, 2) - &q * &q));
        assert!((&s - complement(&q)).norm() < 1e-12);
        let y = doubling_isometry(&q, &basis).unwrap();
        for _ in 0..10 {
            let x: Vec<C> = (0..d)
                .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let nx = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            worst_iso = worst_iso.max((y.apply(&x, d).norm() - nx).abs() / nx);
        }
        let f = [C::new(rng.random_range(-1.0..1.0), 0.2), C::new(-0.3, rng.random_range(-1.0..1.0))];
        let lift = |g: DVector<C>| -> DMatrix<C> { &adag[0] * g[0] + &adag[1] * g[1] };
        let fv = DVector::from_row_slice(&f);
        let a_f = lift(fv.clone());
        let c_q = lift(&q * &fv);
        let d_s = lift(&s * &fv);
        for col in (0..d).filter(|&col| basis.total(col) < basis.cutoff()) {
            let mut e = vec![C::default(); d];
            e[col] = C::new(1.0, 0.0);
            let lhs = y.apply(a_f.column(col).as_slice(), d);
            let ye = y.apply(&e, d);
            let rhs = &c_q * &ye + &ye * d_s.transpose();
            worst_int = worst_int.max((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    outcome(
        worst_identity <= 1e-10 && min_eig >= -1e-12 && worst_iso <= 1e-12 && worst_int <= 1e-12,
        format!(
            "identities {worst_identity:.2e} (tol 1e-10), min eigenvalue {min_eig:.2e}, isometry {worst_iso:.2e}, intertwining {worst_int:.2e} (tol 1e-12)"
        ),
    )
}

fn binding() -> Outcome {
    let opts = MinimizeOptions::default();
    let mut gaps = Vec::new();
    for (n, l) in [(256, 32.0), (512, 64.0), (512, 32.0)] {
        let grid = Grid::new(n, l).unwrap();
        let (ev, e0) = binding_gap(&sample_problem(&grid).unwrap(), &opts).unwrap();
        gaps.push((ev, e0, e0 - ev));
    }
    let base = gaps[0].2;
    let stable = gaps.iter().all(|g| g.0 < g.1 && (g.2 - base).abs() <= 0.1 * base);
    outcome(
        stable,
        format!(
            "gap {} for (n, L) = (256, 32), (512, 64), (512, 32)",
            gaps.iter().map(|g| format!("{:.6e}", g.2)).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let (o, t) = timed(square_completion);
    all &= report(1, "square completion", 1.0, t, &o);
    let (o, t) = timed(gradient_check);
    all &= report(2, "gradient check", 5.0, t, &o);
    let (o, t) = timed(effective_potential_positivity);
    all &= report(3, "effective potential positivity", 1.0, t, &o);
    let (o, t) = timed(decoupled_limit);
    all &= report(4, "decoupled limit", 30.0, t, &o);
    let (o, t) = timed(dense_oracle_equivalence);
    all &= report(5, "dense oracle equivalence", 60.0, t, &o);

    let (s, t_sweep) = timed(sweep);
    let (o, t) = timed(|| energy_convergence(&s));
    all &= report(6, "energy convergence", 600.0, t_sweep + t, &o);
    let (o, t) = timed(|| state_convergence(&s));
    all &= report(7, "convergence of states", 600.0, t_sweep + t, &o);

    let (o, t) = timed(mixed_rank_one);
    all &= report(8, "mixed Pekar rank one", 120.0, t, &o);
    let (o, t) = timed(localization_identities);
    all &= report(9, "localization identities", 120.0, t, &o);
    let (o, t) = timed(binding);
    all &= report(10, "binding", 300.0, t, &o);

    let (o, t) = timed(|| mass_concentration(&s));
    all &= report(11, "mass concentration", 600.0, t_sweep + t, &o);
    let (o, t) = timed(|| husimi_concentration(&s));
    all &= report(12, "Husimi concentration", 300.0, t, &o);

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
