//! Finite-alphabet probability objects and the information measures built on
//! them. Public measures are reported in bits; `0 log 0 = 0` throughout.

mod alphabet;
mod channel;
mod empirical;
mod joint;
pub mod measures;
mod metric;
mod pmf;

pub use alphabet::Alphabet;
pub use channel::Channel;
pub use empirical::EmpiricalType;
pub use joint::{Axis, Conditional, JointPmf};
pub use metric::{Metric, MetricKind, MIN_DECODING_VALUE};
pub use pmf::{Pmf, MASS_TOLERANCE};

use crate::error::{Error, Result};

/// Anything that is a finite probability vector with a comparable shape.
pub trait Distribution {
    fn masses(&self) -> &[f64];
    fn shape(&self) -> Vec<&Alphabet>;
}

impl Distribution for Pmf {
    fn masses(&self) -> &[f64] {
        self.probs()
    }
    fn shape(&self) -> Vec<&Alphabet> {
        vec![self.alphabet()]
    }
}

impl Distribution for JointPmf {
    fn masses(&self) -> &[f64] {
        self.probs()
    }
    fn shape(&self) -> Vec<&Alphabet> {
        vec![self.first(), self.second()]
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &Pmf) -> f64 {
    p.entropy()
}

/// Mutual information between the two variables of `j`, in bits.
pub fn mutual_information(j: &JointPmf) -> f64 {
    j.mutual_information()
}

/// `D(p ‖ q)` in bits. Fails when `p` is not absolutely continuous w.r.t. `q`.
pub fn kl_divergence<D: Distribution>(p: &D, q: &D) -> Result<f64> {
    let (sp, sq) = (p.shape(), q.shape());
    if sp.len() != sq.len() || sp.iter().zip(&sq).any(|(a, b)| !a.compatible(b)) {
        return Err(Error::AlphabetMismatch {
            expected: sp.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("×"),
            found: sq.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("×"),
        });
    }
    Ok(measures::to_bits(measures::kl_nats(p.masses(), q.masses())?))
}

/// Output distribution of `k` driven by `p`.
pub fn compose(k: &Channel, p: &Pmf) -> Result<Pmf> {
    k.apply(p)
}

pub fn joint_from(k: &Channel, p: &Pmf) -> Result<JointPmf> {
    JointPmf::from_channel(k, p)
}

pub fn marginal(j: &JointPmf, axis: Axis) -> Pmf {
    j.marginal(axis)
}

pub fn condition(j: &JointPmf, axis: Axis) -> Conditional {
    j.condition(axis)
}

pub fn empirical_type(seq: &[usize], alphabet: &Alphabet) -> Result<EmpiricalType> {
    EmpiricalType::of(seq, alphabet)
}

pub fn joint_empirical_type(
    a: &[usize],
    b: &[usize],
    first: &Alphabet,
    second: &Alphabet,
) -> Result<EmpiricalType> {
    EmpiricalType::of_pair(a, b, first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn bin(name: &str) -> Alphabet {
        Alphabet::indexed(name, 2)
    }

    fn h2_closed_form(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::uniform(bin("X"))), 1.0);
        assert_eq!(entropy(&Pmf::point_mass(bin("X"), 1).unwrap()), 0.0);
        let p = Pmf::new(bin("X"), vec![0.11, 0.89]).unwrap();
        assert!((entropy(&p) - h2_closed_form(0.11)).abs() < 1e-14);
        assert!((entropy(&p) - 0.49991).abs() < 1e-5);
    }

    #[test]
    fn mutual_information_examples() {
        let u = Pmf::uniform(bin("X"));
        let q = Pmf::new(bin("Y"), vec![0.3, 0.7]).unwrap();
        assert!(mutual_information(&JointPmf::product(&u, &q)).abs() < 1e-15);
        let diag = JointPmf::new(bin("X"), bin("Y"), vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&diag) - 1.0).abs() < 1e-15);
        let j = joint_from(&Channel::bsc(0.1, "X", "Y").unwrap(), &u).unwrap();
        assert!((mutual_information(&j) - (1.0 - h2_closed_form(0.1))).abs() < 1e-14);
        assert!((mutual_information(&j) - 0.5310).abs() < 1e-4);
    }

    #[test]
    fn kl_examples() {
        let p = Pmf::new(bin("X"), vec![0.11, 0.89]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let point = Pmf::point_mass(bin("X"), 0).unwrap();
        let u = Pmf::uniform(bin("X"));
        assert!((kl_divergence(&point, &u).unwrap() - 1.0).abs() < 1e-15);
        assert!((kl_divergence(&p, &u).unwrap() - (1.0 - h2_closed_form(0.11))).abs() < 1e-14);
        assert!((kl_divergence(&p, &u).unwrap() - 0.50009).abs() < 1e-5);
        assert!(matches!(
            kl_divergence(&u, &point),
            Err(Error::AbsoluteContinuityViolation { index: 1, .. })
        ));
        assert!(kl_divergence(&u, &Pmf::uniform(Alphabet::indexed("X", 3))).is_err());
    }

    #[test]
    fn compose_examples() {
        let bsc = Channel::bsc(0.1, "X", "Y").unwrap();
        let half = compose(&bsc, &Pmf::uniform(bin("X"))).unwrap();
        assert!((half.get(0) - 0.5).abs() < 1e-15);
        let p = Pmf::new(bin("X"), vec![0.2, 0.8]).unwrap();
        assert_eq!(compose(&Channel::identity(bin("X"), "Y"), &p).unwrap().probs(), p.probs());
        let out = compose(&bsc, &p).unwrap();
        assert!((out.get(0) - 0.26).abs() < 1e-15 && (out.get(1) - 0.74).abs() < 1e-15);
        assert!(compose(&bsc, &Pmf::uniform(Alphabet::indexed("X", 3))).is_err());
    }

    #[test]
    fn joint_marginal_condition_round_trip() {
        let bsc = Channel::bsc(0.1, "X", "Y").unwrap();
        let p = Pmf::new(bin("X"), vec![0.2, 0.8]).unwrap();
        let j = joint_from(&bsc, &p).unwrap();
        assert_eq!(marginal(&j, Axis::First).probs(), p.probs());
        let out = compose(&bsc, &p).unwrap();
        for (a, b) in marginal(&j, Axis::Second).probs().iter().zip(out.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        let forward = condition(&j, Axis::First);
        assert!(forward.zero_mass.is_empty());
        for (a, b) in forward.channel.as_flat().iter().zip(bsc.as_flat()) {
            assert!((a - b).abs() < 1e-14);
        }
        // Bayes by hand: P(x | y=0) = (0.2·0.9, 0.8·0.1) / 0.26.
        let reverse = condition(&j, Axis::Second).channel;
        assert!((reverse.get(0, 0) - 0.18 / 0.26).abs() < 1e-14);
        assert!((reverse.get(0, 1) - 0.08 / 0.26).abs() < 1e-14);
        assert!((reverse.get(1, 0) - 0.02 / 0.74).abs() < 1e-14);

        let ident = condition(
            &joint_from(&Channel::identity(bin("X"), "Y"), &Pmf::uniform(bin("X"))).unwrap(),
            Axis::First,
        );
        assert!(ident.channel.is_identity());
    }

    #[test]
    fn condition_flags_zero_mass() {
        let j = JointPmf::new(bin("X"), bin("Y"), vec![vec![0.4, 0.6], vec![0.0, 0.0]]).unwrap();
        let c = condition(&j, Axis::First);
        assert_eq!(c.zero_mass, vec![1]);
        assert_eq!(c.channel.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn construction_rejects_bad_mass() {
        assert!(Pmf::new(bin("X"), vec![0.5, 0.49]).is_err());
        assert!(Pmf::new(bin("X"), vec![1.1, -0.1]).is_err());
        assert!(Pmf::new(bin("X"), vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(Channel::new(bin("X"), bin("Y"), vec![vec![0.5, 0.48], vec![0.5, 0.5]]).is_err());
        let p = Pmf::normalize(bin("X"), vec![1.0, 3.0]).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn empirical_type_examples() {
        let t = empirical_type(&[0, 1, 0, 0, 1], &bin("X")).unwrap();
        assert_eq!(t.counts(), &[3, 2]);
        assert_eq!(t.to_pmf().unwrap().probs(), &[0.6, 0.4]);
        let c = empirical_type(&[1, 1, 1], &bin("X")).unwrap();
        assert_eq!(c.to_pmf().unwrap().probs(), &[0.0, 1.0]);
        let jt = joint_empirical_type(&[0, 1, 0], &[1, 0, 1], &bin("X"), &bin("Y")).unwrap();
        let j = jt.to_joint().unwrap();
        assert!((j.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((j.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(j.get(0, 0), 0.0);
        assert!(matches!(
            joint_empirical_type(&[0, 1], &[0], &bin("X"), &bin("Y")),
            Err(Error::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            empirical_type(&[0, 2], &bin("X")),
            Err(Error::SymbolOutOfRange { symbol: 2, size: 2 })
        ));
        assert!(empirical_type(&[], &bin("X")).is_err());
    }

    #[test]
    fn empirical_type_concentrates() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let alph = Alphabet::indexed("X", 4);
        let mut failures = 0;
        for _ in 0..200 {
            let w: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() + 0.01).collect();
            let p = Pmf::normalize(alph.clone(), w).unwrap();
            let seq: Vec<usize> = (0..10_000)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    p.probs().iter().position(|&q| {
                        acc += q;
                        u < acc
                    }).unwrap_or(3)
                })
                .collect();
            let t = empirical_type(&seq, &alph).unwrap().to_pmf().unwrap();
            if t.total_variation(&p) >= 0.05 {
                failures += 1;
            }
        }
        assert!(failures <= 2, "{failures} of 200 exceeded TV 0.05");
    }

    fn pmf_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("nonzero", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-3).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    fn channel_strategy(r: usize, c: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(pmf_strategy(c), r)
    }

    proptest! {
        #[test]
        fn mi_bounded_by_entropies(p in pmf_strategy(3), rows in channel_strategy(3, 4)) {
            let x = Alphabet::indexed("X", 3);
            let p = Pmf::new(x.clone(), p).unwrap();
            let k = Channel::new(x, Alphabet::indexed("Y", 4), rows).unwrap();
            let j = joint_from(&k, &p).unwrap();
            let i = mutual_information(&j);
            prop_assert!(i >= 0.0);
            prop_assert!(i <= entropy(&p) + 1e-10);
            prop_assert!(i <= entropy(&compose(&k, &p).unwrap()) + 1e-10);
        }

        #[test]
        fn kl_to_product_is_mi(w in pmf_strategy(12)) {
            let j = JointPmf::from_flat(Alphabet::indexed("A", 3), Alphabet::indexed("B", 4), w).unwrap();
            let kl = kl_divergence(&j, &j.product_of_marginals()).unwrap();
            prop_assert!((kl - mutual_information(&j)).abs() < 1e-10);
            prop_assert!((mutual_information(&j) - mutual_information(&j.transpose())).abs() < 1e-12);
        }

        #[test]
        fn measures_permutation_invariant(w in pmf_strategy(6), shift in 0usize..3) {
            let j = JointPmf::from_flat(Alphabet::indexed("A", 3), Alphabet::indexed("B", 2), w.clone()).unwrap();
            let mut permuted = vec![0.0; 6];
            for a in 0..3 {
                for b in 0..2 {
                    permuted[((a + shift) % 3) * 2 + (1 - b)] = w[a * 2 + b];
                }
            }
            let jp = JointPmf::from_flat(Alphabet::indexed("A", 3), Alphabet::indexed("B", 2), permuted).unwrap();
            prop_assert!((mutual_information(&j) - mutual_information(&jp)).abs() < 1e-12);
            prop_assert!((j.entropy() - jp.entropy()).abs() < 1e-12);
            prop_assert!((j.marginal(Axis::First).entropy() - jp.marginal(Axis::First).entropy()).abs() < 1e-12);
        }
    }
}
