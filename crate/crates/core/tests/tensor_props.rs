use proptest::prelude::*;
use sigpath::lie::{lyndon_words, witt_dimension, LyndonBasis};
use sigpath::{shuffle, tensor_to_lie_coords, LieCoordinates, TruncatedTensor, Word};

fn mobius(n: usize) -> i64 {
    let primes: Vec<usize> = (2..=n).filter(|p| n % p == 0 && (2..*p).all(|q| p % q != 0)).collect();
    if primes.iter().any(|p| n % (p * p) == 0) {
        0
    } else if primes.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn tensor(dim: usize, depth: usize, level0: f64) -> impl Strategy<Value = TruncatedTensor> {
    let total: usize = (1..=depth).map(|k| dim.pow(k as u32)).sum();
    prop::collection::vec(-1.0f64..1.0, total).prop_map(move |flat| {
        let mut levels = vec![vec![level0]];
        let mut it = flat.into_iter();
        for k in 1..=depth {
            levels.push(it.by_ref().take(dim.pow(k as u32)).collect());
        }
        TruncatedTensor::from_levels(dim, depth, levels).unwrap()
    })
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=6).prop_filter("keep sizes modest", |(d, n)| d.pow(*n as u32) <= 4096)
}

fn word(dim: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=dim, 0..=max_len).prop_map(Word::from_letters)
}

fn rel_err(a: &TruncatedTensor, b: &TruncatedTensor) -> f64 {
    a.sub(b).unwrap().max_abs() / (1.0 + a.max_abs().max(b.max_abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_is_associative(
        (a, b, c) in shape().prop_flat_map(|(d, n)| (tensor(d, n, 1.0), tensor(d, n, -0.5), tensor(d, n, 2.0)))
    ) {
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(rel_err(&left, &right) <= 1e-12);
    }

    #[test]
    fn exp_inverts_log(a in (1usize..=3, 1usize..=5).prop_flat_map(|(d, n)| tensor(d, n, 1.0))) {
        let back = a.log().unwrap().exp().unwrap();
        prop_assert!(rel_err(&a, &back) <= 1e-10);
    }

    #[test]
    fn log_inverts_exp(b in (1usize..=3, 1usize..=5).prop_flat_map(|(d, n)| tensor(d, n, 0.0))) {
        let back = b.exp().unwrap().log().unwrap();
        prop_assert!(rel_err(&b, &back) <= 1e-10);
    }

    #[test]
    fn inverse_is_two_sided(a in (1usize..=3, 1usize..=5).prop_flat_map(|(d, n)| tensor(d, n, 1.0))) {
        let inv = a.inverse().unwrap();
        let id = TruncatedTensor::identity(a.dim(), a.depth());
        prop_assert!(rel_err(&a.mul(&inv).unwrap(), &id) <= 1e-10);
        prop_assert!(rel_err(&inv.mul(&a).unwrap(), &id) <= 1e-10);
    }

    #[test]
    fn shuffle_commutes_and_associates(
        (u, v, w) in (1usize..=3).prop_flat_map(|d| (word(d, 3), word(d, 3), word(d, 2)))
    ) {
        prop_assert_eq!(shuffle(&u, &v), shuffle(&v, &u));
        let left = shuffle(&u, &v).shuffle(&sigpath::tensor::Shuffle::single(w.clone()));
        let right = sigpath::tensor::Shuffle::single(u.clone()).shuffle(&shuffle(&v, &w));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn shuffle_term_count((u, v) in (1usize..=3).prop_flat_map(|d| (word(d, 4), word(d, 4)))) {
        let n = u.degree() + v.degree();
        prop_assert_eq!(shuffle(&u, &v).total_multiplicity(), binomial(n, u.degree()));
        prop_assert!(shuffle(&u, &v).terms().keys().all(|w| w.degree() == n));
    }

    #[test]
    fn lie_coordinates_round_trip(
        (d, n, seed) in (1usize..=3, 1usize..=5, prop::collection::vec(-2.0f64..2.0, 200))
    ) {
        let basis = LyndonBasis::cached(d, n);
        let coords: Vec<f64> = seed.iter().cycle().take(basis.len()).copied().collect();
        let l = LieCoordinates::new(basis.clone(), coords.clone()).unwrap();
        let back = tensor_to_lie_coords(&l.to_tensor()).unwrap();
        for (a, b) in coords.iter().zip(back.coords()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn exp_of_lie_element_is_grouplike(
        (d, n, seed) in (2usize..=3, 2usize..=4, prop::collection::vec(-1.0f64..1.0, 40))
    ) {
        let basis = LyndonBasis::cached(d, n);
        let coords: Vec<f64> = seed.iter().cycle().take(basis.len()).copied().collect();
        let g = LieCoordinates::new(basis, coords).unwrap().to_tensor().exp().unwrap();
        for u in Word::all_up_to(d, n) {
            for v in Word::all_up_to(d, n - u.degree()) {
                let lhs = g.inner(&u).unwrap() * g.inner(&v).unwrap();
                let rhs = shuffle(&u, &v).pair(&g).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }
}

#[test]
fn witt_counts_match_generated_bases() {
    for d in 1..=4usize {
        for k in 1..=6usize {
            let formula: i64 = (1..=k)
                .filter(|m| k % m == 0)
                .map(|m| mobius(m) * (d as i64).pow((k / m) as u32))
                .sum::<i64>()
                / k as i64;
            let generated = lyndon_words(d, k).iter().filter(|w| w.degree() == k).count();
            assert_eq!(generated as i64, formula, "d={d} k={k}");
            assert_eq!(witt_dimension(d, k) as i64, formula);
        }
    }
}

#[test]
fn non_lie_tensor_is_rejected() {
    let t = TruncatedTensor::from_word(2, 2, &"1,2".parse().unwrap(), 1.0).unwrap();
    assert!(tensor_to_lie_coords(&t).is_err());
}
