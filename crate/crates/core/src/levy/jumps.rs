use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{Density1D, LevyError, LevyMeasure};
use crate::rng::RngState;

/// One jump of the driving process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
}

/// Draw from `Normal(0, A·dt)`; exactly zero (and no randomness consumed)
/// when `A = 0`.
pub fn sample_brownian_increment(a: f64, dt: f64, rng: &mut RngState) -> f64 {
    debug_assert!(dt > 0.0);
    if a == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    (a * dt).sqrt() * z
}

/// Buffered random signs, 64 per generator draw.
#[derive(Clone, Copy, Debug, Default)]
pub struct SignPool {
    word: u64,
    left: u32,
}

impl SignPool {
    /// `v` with a random sign, without a data-dependent branch.
    #[inline]
    pub fn apply(&mut self, v: f64, rng: &mut RngState) -> f64 {
        if self.left == 0 {
            self.word = rng.random();
            self.left = 64;
        }
        let bit = self.word & 1;
        self.word >>= 1;
        self.left -= 1;
        f64::from_bits(v.to_bits() ^ ((bit ^ 1) << 63))
    }
}

#[derive(Clone, Debug)]
enum Component {
    Stable { epsilon: f64, inv_alpha: f64 },
    Poisson { jumps: Density1D, epsilon: f64 },
}

impl Component {
    #[inline]
    fn size(&self, rng: &mut RngState, signs: &mut SignPool) -> f64 {
        match self {
            Component::Stable { epsilon, inv_alpha } => {
                // |y| = ε U^{-1/α} with U uniform, written as ε·exp(E/α), E ~ Exp(1).
                let e: f64 = Exp1.sample(rng);
                signs.apply(epsilon * (e * inv_alpha).exp(), rng)
            }
            Component::Poisson { jumps, epsilon } => loop {
                let y = jumps.sample(rng);
                if y.abs() > *epsilon {
                    break y;
                }
            },
        }
    }
}

/// Marked Poisson process of the jumps of ν with `|y| > ε`.
#[derive(Clone, Debug)]
pub struct JumpSampler {
    components: Vec<(f64, Component)>,
    total_rate: f64,
    inv_rate: f64,
    epsilon: f64,
}

impl JumpSampler {
    pub fn new(nu: &LevyMeasure, epsilon: f64) -> Result<Self, LevyError> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(LevyError::InvalidTruncation(epsilon));
        }
        let mut components = Vec::new();
        collect(nu, epsilon, &mut components)?;
        let total_rate = components.iter().map(|c| c.0).sum();
        Ok(Self { components, total_rate, inv_rate: 1.0 / total_rate, epsilon })
    }

    /// `ν(|y| > ε)`, the jump intensity.
    pub fn rate(&self) -> f64 {
        self.total_rate
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Waiting time to the next jump; infinite when there are no jumps.
    #[inline]
    pub fn next_gap(&self, rng: &mut RngState) -> f64 {
        if self.total_rate == 0.0 {
            return f64::INFINITY;
        }
        let e: f64 = Exp1.sample(rng);
        e * self.inv_rate
    }

    /// Size of a jump, drawn from ν restricted to `|y| > ε` and normalised.
    #[inline]
    pub fn next_size(&self, rng: &mut RngState, signs: &mut SignPool) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].1.size(rng, signs);
        }
        let mut u = rng.random::<f64>() * self.total_rate;
        for (rate, c) in &self.components {
            if u < *rate {
                return c.size(rng, signs);
            }
            u -= rate;
        }
        self.components.last().expect("sampler has components").1.size(rng, signs)
    }
}

fn collect(nu: &LevyMeasure, epsilon: f64, out: &mut Vec<(f64, Component)>) -> Result<(), LevyError> {
    match nu {
        LevyMeasure::Null => {}
        LevyMeasure::AlphaStable { alpha, .. } => {
            out.push((nu.tail_mass(epsilon), Component::Stable { epsilon, inv_alpha: 1.0 / alpha }));
        }
        LevyMeasure::CompoundPoisson { jumps, .. } => {
            let rate = nu.tail_mass(epsilon);
            if rate > 0.0 {
                out.push((rate, Component::Poisson { jumps: jumps.clone(), epsilon }));
            }
        }
        LevyMeasure::Sum(parts) => {
            for p in parts {
                collect(p, epsilon, out)?;
            }
        }
    }
    Ok(())
}

/// All jumps with `|size| > epsilon` on `[0, horizon]`, in increasing time.
pub fn sample_jumps(
    nu: &LevyMeasure,
    horizon: f64,
    epsilon: f64,
    rng: &mut RngState,
) -> Result<Vec<JumpEvent>, LevyError> {
    let sampler = JumpSampler::new(nu, epsilon)?;
    if !(horizon > 0.0) {
        return Err(LevyError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let mut events = Vec::new();
    let mut signs = SignPool::default();
    let mut t = sampler.next_gap(rng);
    while t <= horizon {
        let size = sampler.next_size(rng, &mut signs);
        events.push(JumpEvent { time: t, size });
        t += sampler.next_gap(rng);
    }
    Ok(events)
}
