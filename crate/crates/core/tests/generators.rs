use kaczmarz::linalg::inf_norm;
use kaczmarz::problems::{
    gen_lattice, gen_overdetermined, gen_two_moons_label_prop, GeneratorSpec, ProblemKind,
    DEFAULT_SCALE_FACTOR, DEFAULT_SCALE_PROB,
};

#[test]
fn overdetermined_density_matches_the_resampled_expectation() {
    let (m, n) = (2500usize, 1000usize);
    let p = (m as f64).ln() / (2.0 * m as f64);
    // rows are redrawn until nonempty, so the mean is conditioned on nnz >= 1
    let conditional = n as f64 * p / (1.0 - (1.0 - p).powi(n as i32));
    let unconditional = n as f64 * p;
    assert!((unconditional - 1.565).abs() < 1e-3);
    let mut total = 0usize;
    let seeds = 5;
    for seed in 0..seeds {
        let sys = gen_overdetermined(m, n, DEFAULT_SCALE_PROB, DEFAULT_SCALE_FACTOR, seed).unwrap();
        total += sys.matrix().nnz();
    }
    let mean = total as f64 / (seeds as usize * m) as f64;
    assert!(
        (mean - conditional).abs() <= 0.1 * conditional,
        "mean {mean}, expected {conditional}"
    );
}

#[test]
fn scaled_row_fraction_is_within_three_sigma() {
    let (m, n) = (2500usize, 1000usize);
    let seeds = 4u64;
    let mut scaled = 0usize;
    for seed in 0..seeds {
        let sys = gen_overdetermined(m, n, DEFAULT_SCALE_PROB, DEFAULT_SCALE_FACTOR, seed).unwrap();
        // unscaled entries lie in (0, 1]; a scaled row has an entry above 1 unless
        // all of its draws were below 1e-4
        scaled += (0..m)
            .filter(|&i| sys.matrix().row(i).values.iter().any(|&v| v > 1.0))
            .count();
    }
    let trials = (seeds as usize * m) as f64;
    let p = 1.0 / 11.0;
    let sigma = (p * (1.0 - p) / trials).sqrt();
    let frac = scaled as f64 / trials;
    assert!((frac - p).abs() <= 3.0 * sigma, "fraction {frac}");
}

#[test]
fn lattice_matches_its_pattern_rules() {
    for side in [2usize, 3, 7] {
        let sys = gen_lattice(side, 1).unwrap();
        let n = side * side;
        for i in 0..n {
            let mut want = vec![i];
            if i % side != 0 {
                want.push(i - 1);
            }
            if (i + 1) % side != 0 {
                want.push(i + 1);
            }
            if i >= side {
                want.push(i - side);
            }
            if i + side < n {
                want.push(i + side);
            }
            want.sort_unstable();
            assert_eq!(
                sys.matrix().row(i).indices,
                want.as_slice(),
                "side {side} row {i}"
            );
        }
    }
}

#[test]
fn generated_systems_are_consistent() {
    let specs = [
        "lattice:10",
        "overdetermined:300x100",
        "two-moons:300:20:5",
        "diagonal:1,0.5,2",
        "random:40x10:0.2",
    ];
    for (seed, s) in specs.iter().enumerate() {
        let kind: ProblemKind = s.parse().unwrap();
        let sys = GeneratorSpec::new(kind, seed as u64)
            .generate()
            .unwrap()
            .system;
        let r = sys.residual_vector(sys.reference().unwrap()).unwrap();
        assert!(inf_norm(&r) <= 1e-10 * (1.0 + inf_norm(sys.rhs())), "{s}");
    }
}

#[test]
fn two_moons_solution_separates_the_classes() {
    let sys = gen_two_moons_label_prop(400, 40, 5, 0.1, 3).unwrap();
    let y = sys.reference().unwrap();
    assert_eq!(y.len(), 360);
    // harmonic solution lies in [-1, 1]
    assert!(y.iter().all(|v| (-1.0 - 1e-9..=1.0 + 1e-9).contains(v)));
}

#[test]
fn different_seeds_give_different_systems() {
    let a = gen_lattice(4, 1).unwrap();
    let b = gen_lattice(4, 2).unwrap();
    assert_eq!(a.matrix().row(0).indices, b.matrix().row(0).indices);
    assert_ne!(a.rhs(), b.rhs());
}
