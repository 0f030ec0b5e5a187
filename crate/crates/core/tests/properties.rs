use adaprep::analysis::{
    entanglement_entropy, log_negativity, qfi_check, renyi2_and_delta_e2, wineland, wineland_scaled, LogBase, SpinState,
};
use adaprep::hilbert::{
    dicke_operators, embed, jw_annihilation, partial_trace, partial_transpose, sigma_minus, sigma_plus, sigma_z, total_parity,
    DickeSpace, FermionMap, QubitRegister, Site,
};
use adaprep::lindblad::{build_superoperator, spectrum, unvectorize, vectorize, Jump, LindbladModel, Register};
use adaprep::models::squeezing_dark_state;
use adaprep::numkernel::{eig, expm, kron, solve, trace_norm, CMatrix, CVector, C64};
use proptest::prelude::*;

fn cmatrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| CMatrix::from_vec(rows, cols, v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

fn square(max: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max).prop_flat_map(|n| cmatrix(n, n))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    cmatrix(n, n).prop_map(|a| (&a + &a.adjoint()).scale_re(0.5))
}

fn density(n: usize) -> impl Strategy<Value = CMatrix> {
    cmatrix(n, n).prop_map(|a| {
        let r = a.matmul(&a.adjoint());
        let t = r.trace().re;
        r.scale_re(1.0 / t)
    })
}

fn state(n: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| CVector::from_vec(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).normalized().unwrap())
}

fn reg(n: usize) -> QubitRegister {
    QubitRegister::new((1..=n).map(Site::A).collect()).unwrap()
}

fn anti(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &a.matmul(b) + &b.matmul(a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kron_associative(a in square(3), b in square(3), c in square(2)) {
        let l = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let r = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        prop_assert!(l.max_diff(&r) <= 1e-14);
    }

    #[test]
    fn kron_bilinear(a in cmatrix(2, 3), b in cmatrix(2, 3), c in square(4), s in (-2.0f64..2.0, -2.0f64..2.0)) {
        let s = C64::new(s.0, s.1);
        let lhs = kron(&(&a.scale(s) + &b), &c).unwrap();
        let rhs = &kron(&a, &c).unwrap().scale(s) + &kron(&b, &c).unwrap();
        prop_assert!(lhs.max_diff(&rhs) <= 1e-14);
        let lhs = kron(&c, &(&a.scale(s) + &b)).unwrap();
        let rhs = &kron(&c, &a).unwrap().scale(s) + &kron(&c, &b).unwrap();
        prop_assert!(lhs.max_diff(&rhs) <= 1e-14);
    }

    #[test]
    fn kron_entry_formula(a in cmatrix(2, 3), b in cmatrix(3, 2)) {
        let k = kron(&a, &b).unwrap();
        for i in 0..2 { for j in 0..3 { for p in 0..3 { for q in 0..2 {
            prop_assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
        }}}}
    }

    #[test]
    fn expm_hermitian_is_unitary(h in (1usize..=16).prop_flat_map(hermitian)) {
        let d = h.rows();
        let mi = C64::new(0.0, -1.0);
        let u = expm(&h.scale(mi), true).unwrap();
        let v = expm(&h.scale(-mi), true).unwrap();
        prop_assert!(u.matmul(&v).max_diff(&CMatrix::identity(d)) <= 1e-10);
        prop_assert!(u.matmul(&u.adjoint()).max_diff(&CMatrix::identity(d)) <= 1e-10);
    }

    #[test]
    fn expm_general_inverse(a in square(6)) {
        let d = a.rows();
        let e = expm(&a, false).unwrap();
        let f = expm(&a.scale_re(-1.0), false).unwrap();
        prop_assert!(e.matmul(&f).max_diff(&CMatrix::identity(d)) <= 1e-10);
    }

    #[test]
    fn eig_reconstruction(a in (1usize..=24).prop_flat_map(|n| cmatrix(n, n))) {
        let dec = eig(&a, false, true).unwrap();
        let v = dec.right_vectors.unwrap();
        let lam = CMatrix::from_diag(&dec.values);
        let lhs = a.matmul(&v);
        let rhs = v.matmul(&lam);
        let scale = a.norm().max(1.0);
        prop_assert!(lhs.max_diff(&rhs) <= 1e-8 * scale);
        let vinv = solve(&v, &CMatrix::identity(a.rows())).unwrap();
        let recon = v.matmul(&lam).matmul(&vinv);
        prop_assert!(recon.max_diff(&a) <= 1e-8 * scale);
        for w in dec.values.windows(2) {
            prop_assert!(w[0].re >= w[1].re - 1e-12);
        }
    }

    #[test]
    fn trace_norm_bounds_trace(a in square(8)) {
        prop_assert!(trace_norm(&a).unwrap() >= a.trace().norm() - 1e-12);
    }

    #[test]
    fn trace_norm_of_psd_is_trace(rho in (1usize..=8).prop_flat_map(density)) {
        prop_assert!((trace_norm(&rho).unwrap() - rho.trace().re).abs() <= 1e-10);
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity(rho in density(8), keep in prop::sample::subsequence(vec![0usize, 1, 2], 0..=3)) {
        let r = reg(3);
        let sites: Vec<Site> = keep.iter().map(|&i| Site::A(i + 1)).collect();
        let out = partial_trace(&rho, &sites, &r).unwrap();
        prop_assert_eq!(out.rows(), 1 << sites.len());
        prop_assert!((out.trace() - rho.trace()).norm() <= 1e-12);
        prop_assert!(out.hermiticity_error() <= 1e-12);
        prop_assert!(eig(&out, true, false).unwrap().values.iter().all(|l| l.re >= -1e-12));
        if sites.len() == 3 {
            prop_assert!(out.max_diff(&rho) <= 1e-15);
        }
    }

    #[test]
    fn partial_transpose_is_hermitian_involution(rho in density(8), sub in prop::sample::subsequence(vec![0usize, 1, 2], 0..=3)) {
        let r = reg(3);
        let sites: Vec<Site> = sub.iter().map(|&i| Site::A(i + 1)).collect();
        let t = partial_transpose(&rho, &sites, &r).unwrap();
        prop_assert!(t.hermiticity_error() <= 1e-12);
        prop_assert!(partial_transpose(&t, &sites, &r).unwrap().max_diff(&rho) <= 1e-15);
    }

    #[test]
    fn superoperator_is_trace_preserving(h in hermitian(3), l1 in cmatrix(3, 3), l2 in cmatrix(3, 3), rho in density(3), g in 0.1f64..2.0) {
        let m = LindbladModel::new(h, vec![Jump::new(l1, g), Jump::new(l2, 1.0)], Register::Qudits(vec![3])).unwrap();
        let s = build_superoperator(&m).unwrap();
        // vec(I) is a left null vector
        let left = s.matrix.left_matvec(&vectorize(&CMatrix::identity(3)));
        prop_assert!(left.iter().all(|z| z.norm() <= 1e-10));
        let out = unvectorize(&s.matrix.matvec(&vectorize(&rho)), 3);
        prop_assert!(out.trace().norm() <= 1e-12);
        prop_assert!(out.hermiticity_error() <= 1e-12);
        prop_assert!(out.max_diff(&m.apply(&rho)) <= 1e-12);
        prop_assert!(spectrum(&s).unwrap().iter().all(|l| l.re <= 1e-10));
    }

    #[test]
    fn spectrum_invariant_under_basis_rotation(h in hermitian(2), l in cmatrix(2, 2), k in hermitian(2)) {
        let m = LindbladModel::new(h.clone(), vec![Jump::new(l.clone(), 1.0)], Register::Qudits(vec![2])).unwrap();
        let u = expm(&k.scale(C64::new(0.0, -1.0)), true).unwrap();
        let rot = |a: &CMatrix| u.matmul(a).matmul(&u.adjoint());
        let mr = LindbladModel::new(rot(&h), vec![Jump::new(rot(&l), 1.0)], Register::Qudits(vec![2])).unwrap();
        let a = spectrum(&build_superoperator(&m).unwrap()).unwrap();
        let mut b = spectrum(&build_superoperator(&mr).unwrap()).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for x in &a {
            let (k, d) = b.iter().enumerate().map(|(k, y)| (k, (x - y).norm())).min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
            prop_assert!(d <= 1e-9);
            b.swap_remove(k);
        }
    }

    #[test]
    fn entropy_bounds_and_base_conversion(psi in state(16), cut in 1usize..4) {
        let r = reg(4);
        let part: Vec<Site> = (1..=cut).map(Site::A).collect();
        let e = entanglement_entropy(&psi, &part, &r, LogBase::E).unwrap().value;
        let b = entanglement_entropy(&psi, &part, &r, LogBase::Two).unwrap().value;
        let max = cut.min(4 - cut) as f64 * std::f64::consts::LN_2;
        prop_assert!(e >= -1e-12 && e <= max + 1e-12);
        prop_assert!((b - e / std::f64::consts::LN_2).abs() <= 1e-12);
    }

    #[test]
    fn delta_e2_range(rho in (2usize..=5).prop_flat_map(density)) {
        let n = rho.rows();
        let (s2, de2) = renyi2_and_delta_e2(&rho, n).unwrap();
        prop_assert!(s2 >= -1e-12 && s2 <= (n as f64).ln() + 1e-12);
        prop_assert!(de2 >= -1e-12 && de2 <= 1.0 - 1.0 / n as f64 + 1e-12);
        prop_assert!((de2 - ((-s2).exp() - 1.0 / n as f64)).abs() <= 1e-12);
    }

    #[test]
    fn log_negativity_nonnegative_and_ppt_zero(rho in density(4), a in density(2), b in density(2)) {
        let r = reg(2);
        prop_assert!(log_negativity(&rho, &[Site::A(1)], &r).unwrap() >= -1e-12);
        let prod = kron(&a, &b).unwrap();
        prop_assert!(log_negativity(&prod, &[Site::A(1)], &r).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn wineland_scale_invariant(n in 1usize..=12, psi_seed in state(13), lambda in 0.01f64..100.0) {
        let space = DickeSpace::new(n).unwrap();
        let psi = CVector::from_vec(psi_seed.data()[..n + 1].to_vec());
        prop_assume!(psi.norm() > 0.1);
        let psi = psi.normalized().unwrap();
        let w = wineland(SpinState::Pure(&psi), space).unwrap();
        let ws = wineland_scaled(SpinState::Pure(&psi), space, lambda).unwrap();
        if w.is_finite() {
            prop_assert!((w - ws).abs() <= 1e-9 * w.abs().max(1.0));
        } else {
            prop_assert!(ws.is_infinite());
        }
    }

    #[test]
    fn qfi_identity_on_dark_states(half in 1usize..=10, r in 0.0f64..4.0) {
        let n = 2 * half;
        let psi = squeezing_dark_state(n, r).unwrap();
        let (fq, xi2) = qfi_check(&psi, DickeSpace::new(n).unwrap(), r).unwrap();
        prop_assert!((fq * xi2 - n as f64).abs() <= 1e-8 * n as f64);
    }
}

#[test]
fn jordan_wigner_algebra_up_to_five_sites() {
    for n in 1..=5 {
        let r = QubitRegister::chains(n, 0);
        let map = FermionMap::canonical(&r);
        let d = r.dim();
        let c: Vec<CMatrix> = (0..2 * n).map(|i| jw_annihilation(i + 1, &map, &r).unwrap()).collect();
        let id = CMatrix::identity(d);
        let zero = CMatrix::zeros(d, d);
        for i in 0..2 * n {
            for j in 0..2 * n {
                let ccd = anti(&c[i], &c[j].adjoint());
                let target = if i == j { &id } else { &zero };
                assert!(ccd.max_diff(target) <= 1e-12, "n={n} {{c{i},c{j}†}}");
                assert!(anti(&c[i], &c[j]).max_diff(&zero) <= 1e-12, "n={n} {{c{i},c{j}}}");
            }
        }
    }
}

#[test]
fn parity_commutes_with_sigma_z_and_anticommutes_with_ladders() {
    let r = QubitRegister::chains(2, 1);
    let p = total_parity(&r);
    for &s in r.labels() {
        let z = embed(&sigma_z(), &[s], &r).unwrap();
        assert!(p.commutator(&z).max_abs() <= 1e-15);
        for op in [sigma_plus(), sigma_minus()] {
            let e = embed(&op, &[s], &r).unwrap();
            assert!(anti(&p, &e).max_abs() <= 1e-15);
        }
    }
}

#[test]
fn full_partial_trace_is_identity_and_empty_is_trace() {
    let r = QubitRegister::chains(1, 1);
    let psi = CVector::from_vec((0..8).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect()).normalized().unwrap();
    let rho = psi.projector();
    assert!(partial_trace(&rho, &r.labels().to_vec(), &r).unwrap().max_diff(&rho) <= 1e-15);
    let t = partial_trace(&rho, &[], &r).unwrap();
    assert_eq!(t.rows(), 1);
    assert!((t[(0, 0)] - rho.trace()).norm() <= 1e-12);
}

#[test]
fn dicke_ladder_identities() {
    for n in 1..=12 {
        let d = dicke_operators(n).unwrap();
        assert!(d.s_minus.max_diff(&d.s_plus.adjoint()) <= 1e-14);
        assert!(d.s_plus.commutator(&d.s_minus).max_diff(&d.sz) <= 1e-12);
        let c = d.sz.commutator(&d.s_plus);
        assert!(c.max_diff(&d.s_plus.scale_re(2.0)) <= 1e-12);
        let c = d.sz.commutator(&d.s_minus);
        assert!(c.max_diff(&d.s_minus.scale_re(-2.0)) <= 1e-12);
        assert!(d.sx.is_hermitian(1e-14) && d.sy.is_hermitian(1e-14));
        let cas = &(&d.sx.matmul(&d.sx) + &d.sy.matmul(&d.sy)) + &d.sz.matmul(&d.sz);
        let s = n as f64 / 2.0;
        assert!(cas.max_diff(&CMatrix::identity(n + 1).scale_re(4.0 * s * (s + 1.0))) <= 1e-10);
    }
}
