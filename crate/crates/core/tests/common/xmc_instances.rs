//! Random small XMC training problems.

use answer_type::textproc::SparseVector;
use answer_type::xmc::{ClusterParams, RankerParams, TrainExample, XmcParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub examples: Vec<TrainExample>,
    pub queries: Vec<SparseVector>,
    pub extra: Vec<String>,
    pub dim: usize,
    pub params: XmcParams,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_labels = rng.gen_range(2..=46);
    let n_extra = rng.gen_range(0..=4);
    let dim = n_labels + 10;
    let random_x = |rng: &mut ChaCha8Rng, labels: &[usize]| {
        let mut pairs: Vec<(u32, f64)> = labels.iter().map(|&l| (l as u32, rng.gen_range(0.5..1.5))).collect();
        for _ in 0..rng.gen_range(1..4) {
            pairs.push((rng.gen_range(0..dim) as u32, rng.gen_range(0.1..0.6)));
        }
        SparseVector::from_pairs(pairs).normalized()
    };
    let examples = (0..rng.gen_range(60..160))
        .map(|i| {
            let labels: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..n_labels)).collect();
            TrainExample {
                id: format!("q{i}"),
                x: random_x(&mut rng, &labels),
                labels: labels.iter().map(|l| format!("L{l:02}")).collect(),
            }
        })
        .collect();
    let queries = (0..5)
        .map(|_| {
            let l = rng.gen_range(0..n_labels);
            random_x(&mut rng, &[l])
        })
        .collect();
    let params = XmcParams {
        cluster: ClusterParams {
            branching: rng.gen_range(2..=4),
            max_leaf: rng.gen_range(2..=10),
            seed,
            max_iter: 20,
        },
        ranker: RankerParams {
            min_questions: 15,
            ..RankerParams::default()
        },
        beam: 1,
        ..XmcParams::default()
    };
    Instance {
        examples,
        queries,
        extra: (0..n_extra).map(|i| format!("Z{i}")).collect(),
        dim,
        params,
    }
}
