use proptest::prelude::*;
use swept_core::schemes::{self, CATALOG};
use swept_core::substep::{apply_kernel, validate_signature, Kernel, KernelError, StencilView};

/// Frames for one stencil at `level` with small smooth values around a
/// physical base state, so every catalog scheme accepts them.
fn frames(kernel: &dyn Kernel, level: u64, jitter: &[f64]) -> [Vec<f64>; 3] {
    let arity = kernel.signature().input_arity(level);
    let mut base = vec![0.0; kernel.signature().input_arity(0)];
    kernel.init(0, 0.0, &mut base);
    std::array::from_fn(|side| {
        (0..arity)
            .map(|k| {
                let b = base[k % base.len()];
                b * (1.0 + 0.01 * jitter[(side * 16 + k) % jitter.len()])
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pure_and_deterministic(
        scheme in prop::sample::select(CATALOG.to_vec()),
        level in 0u64..1000,
        jitter in prop::collection::vec(-1.0f64..1.0, 48),
    ) {
        let kernel = schemes::build(scheme, 64, None).unwrap();
        let [l, c, r] = frames(kernel.as_ref(), level, &jitter);
        let view = StencilView { left: &l, center: &c, right: &r, dx: kernel.dx(), dt: kernel.dt() };
        let a = apply_kernel(kernel.as_ref(), level, &view).unwrap();
        let b = apply_kernel(kernel.as_ref(), level, &view).unwrap();
        prop_assert_eq!(a.level, level + 1);
        prop_assert_eq!(a.values.len(), kernel.signature().output_arity(level));
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.values), bits(&b.values));
    }

    #[test]
    fn output_feeds_next_substep(
        scheme in prop::sample::select(CATALOG.to_vec()),
        level in 0u64..1000,
    ) {
        let kernel = schemes::build(scheme, 64, None).unwrap();
        let sig = kernel.signature();
        prop_assert_eq!(sig.output_arity(level), sig.input_arity(level + 1));
        prop_assert_eq!(sig.substep_of(level + sig.substeps() as u64), sig.substep_of(level));
    }

    #[test]
    fn wrong_arity_is_rejected(
        scheme in prop::sample::select(CATALOG.to_vec()),
        level in 0u64..64,
    ) {
        let kernel = schemes::build(scheme, 64, None).unwrap();
        let arity = kernel.signature().input_arity(level);
        let short = vec![1.0; arity + 1];
        let view = StencilView { left: &short, center: &short, right: &short, dx: kernel.dx(), dt: kernel.dt() };
        let is_arity_mismatch = matches!(
            apply_kernel(kernel.as_ref(), level, &view),
            Err(KernelError::ArityMismatch { .. })
        );
        prop_assert!(is_arity_mismatch);
    }
}

#[test]
fn catalog_signatures_are_valid_chains() {
    for &name in CATALOG {
        let kernel = schemes::build(name, 32, None).unwrap();
        assert!(validate_signature(kernel.signature()).is_ok(), "{name}");
    }
}

#[test]
fn non_finite_input_is_a_blow_up() {
    let kernel = schemes::build("advection", 16, None).unwrap();
    let nan = [f64::NAN];
    let one = [1.0];
    let view = StencilView {
        left: &one,
        center: &nan,
        right: &one,
        dx: kernel.dx(),
        dt: kernel.dt(),
    };
    assert!(matches!(
        apply_kernel(kernel.as_ref(), 0, &view),
        Err(KernelError::NonFinite { level: 0, .. })
    ));
}

#[test]
fn constant_fields_stay_constant() {
    for &name in ["advection", "advection-rk2", "gradient-chain"].iter() {
        let kernel = schemes::build(name, 16, None).unwrap();
        let sig = kernel.signature();
        let mut frame = vec![0.75];
        for level in 0..(3 * sig.substeps() as u64) {
            let view = StencilView {
                left: &frame,
                center: &frame,
                right: &frame,
                dx: kernel.dx(),
                dt: kernel.dt(),
            };
            frame = apply_kernel(kernel.as_ref(), level, &view).unwrap().values;
        }
        assert_eq!(frame, vec![0.75], "{name}");
    }
}
