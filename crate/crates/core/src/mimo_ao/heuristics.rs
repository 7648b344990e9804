//! Genetic algorithm and particle swarm baselines searching the circuit
//! parameters `(R_n, C_n)` and the precoder jointly, with the LMMSE receiver.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ao::AoState;
use super::precoder::precoder_power;
use super::rate::{lmmse_combiner, rate_lmmse, EvalCounter, LinkModel, NoiseModel};
use super::scenario::{CMatrix, MimoChannels, MimoScenario};
use super::surface::{exact_alpha_bar, SurfaceModel};
use crate::error::Result;
use crate::reflection::RisConfig;
use crate::td_unitcell::{element_reflection, power_for_resistance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicOptions {
    /// Population or swarm size.
    pub population: usize,
    /// Total objective evaluations.
    pub evaluations: usize,
    /// Fitness penalty per watt of budget violation.
    pub penalty: f64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self {
            population: 20,
            evaluations: 400,
            penalty: 1e3,
        }
    }
}

/// Genes live in `[0, 1]` (circuit parameters) or `[-1, 1]` (precoder).
struct Encoding<'a> {
    scenario: &'a MimoScenario,
    channels: &'a MimoChannels,
    surface: &'a SurfaceModel,
    noise: NoiseModel,
    penalty: f64,
    counter: EvalCounter,
}

struct Decoded {
    resistances: Vec<f64>,
    gamma: Vec<Complex64>,
    v: CMatrix,
    power: f64,
}

impl<'a> Encoding<'a> {
    fn dims(&self) -> usize {
        self.surface.n_active + self.surface.n + 2 * self.scenario.m_t * self.scenario.streams
    }

    fn lower(&self, k: usize) -> f64 {
        if k < self.surface.n_active + self.surface.n {
            0.0
        } else {
            -1.0
        }
    }

    fn decode(&self, genes: &[f64]) -> Result<Decoded> {
        let s = self.surface;
        let (r_lo, r_hi) = s.active.circuit.r_range;
        let n_act = s.n_active;
        let resistances: Vec<f64> = (0..n_act)
            .map(|n| r_lo + genes[n] * (r_hi - r_lo))
            .collect();
        let mut gamma = Vec::with_capacity(s.n);
        for n in 0..s.n {
            let circuit = &s.class(n).circuit;
            let (c_lo, c_hi) = circuit.c_range;
            let cap = c_lo + genes[n_act + n] * (c_hi - c_lo);
            let r = if n < n_act {
                resistances[n]
            } else {
                circuit.r_range.0
            };
            gamma.push(element_reflection(cap, r, circuit)?);
        }
        let (m_t, d) = (self.scenario.m_t, self.scenario.streams);
        let base = n_act + s.n;
        let v = CMatrix::from_fn(m_t, d, |r, c| {
            let k = base + 2 * (c * m_t + r);
            Complex64::new(genes[k], genes[k + 1])
        });
        let p = precoder_power(&v);
        let v = if p > 0.0 {
            v * Complex64::from((self.scenario.p_t / p).sqrt())
        } else {
            v
        };
        let power = resistances
            .iter()
            .map(|&r| power_for_resistance(r, &s.diode))
            .sum::<Result<f64>>()?;
        Ok(Decoded {
            resistances,
            gamma,
            v,
            power,
        })
    }

    fn fitness(&self, genes: &[f64]) -> f64 {
        self.counter.tick();
        let eval = || -> Result<f64> {
            let d = self.decode(genes)?;
            let rate = LinkModel::new(self.channels, &d.gamma, &self.noise)?.rate(&d.v)?;
            Ok(rate - self.penalty * (d.power - self.surface.budget).max(0.0))
        };
        eval()
            .ok()
            .filter(|f| f.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dims())
            .map(|k| rng.random_range(self.lower(k)..=1.0))
            .collect()
    }

    fn clamp(&self, genes: &mut [f64]) {
        for (k, g) in genes.iter_mut().enumerate() {
            *g = g.clamp(self.lower(k), 1.0);
        }
    }

    /// Moves every resistance toward the low-power end until the budget
    /// holds, then maps the individual onto a solver state.
    fn finish(&self, genes: &[f64], trace: Vec<f64>, generations: usize) -> Result<AoState> {
        let s = self.surface;
        let mut genes = genes.to_vec();
        let mut decoded = self.decode(&genes)?;
        if !s.within_budget(decoded.power) {
            let original: Vec<f64> = genes[..s.n_active].to_vec();
            let at = |t: f64, genes: &mut Vec<f64>| {
                for n in 0..s.n_active {
                    genes[n] = original[n] + t * (1.0 - original[n]);
                }
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                at(mid, &mut genes);
                if s.within_budget(self.decode(&genes)?.power) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            at(hi, &mut genes);
            decoded = self.decode(&genes)?;
        }
        let phases: Vec<f64> = decoded.gamma.iter().map(|g| g.arg()).collect();
        let alpha_bar = (0..s.n)
            .map(|n| {
                if s.is_active(n) {
                    exact_alpha_bar(phases[n], decoded.gamma[n].norm(), &s.active.circuit)
                        .unwrap_or(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let w = lmmse_combiner(&decoded.v, &decoded.gamma, self.channels, &self.noise)?;
        let rate = rate_lmmse(&decoded.v, &decoded.gamma, self.channels, &self.noise)?;
        debug_assert_eq!(decoded.resistances.len(), s.n_active);
        Ok(AoState {
            v: decoded.v,
            w,
            config: RisConfig { phases, alpha_bar },
            gamma: decoded.gamma,
            rate,
            rate_trace: trace,
            iteration: generations,
            evaluations: self.counter.get(),
            ris_power: decoded.power,
            stalls: 0,
        })
    }
}

fn best_index(fitness: &[f64]) -> usize {
    fitness
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty population")
}

/// Real-coded genetic algorithm: binary tournaments, blend crossover,
/// Gaussian mutation and single elitism.
pub fn ga_solve<R: Rng + ?Sized>(
    scenario: &MimoScenario,
    channels: &MimoChannels,
    surface: &SurfaceModel,
    options: &HeuristicOptions,
    rng: &mut R,
) -> Result<AoState> {
    let enc = Encoding {
        scenario,
        channels,
        surface,
        noise: NoiseModel::from(scenario),
        penalty: options.penalty,
        counter: EvalCounter::default(),
    };
    let pop_size = options.population.max(2);
    let dims = enc.dims();
    let mut pop: Vec<Vec<f64>> = (0..pop_size).map(|_| enc.random(rng)).collect();
    let mut fit: Vec<f64> = pop.iter().map(|g| enc.fitness(g)).collect();
    let mut trace = vec![fit[best_index(&fit)]];
    let mutation_rate = 1.0 / dims as f64;
    let mut generations = 0;
    while enc.counter.get() + pop_size - 1 <= options.evaluations.max(pop_size) {
        let elite = best_index(&fit);
        let mut next = vec![pop[elite].clone()];
        let mut next_fit = vec![fit[elite]];
        let tournament = |rng: &mut R| {
            let a = rng.random_range(0..pop_size);
            let b = rng.random_range(0..pop_size);
            if fit[a] >= fit[b] {
                a
            } else {
                b
            }
        };
        while next.len() < pop_size {
            let (pa, pb) = (tournament(rng), tournament(rng));
            let mut child: Vec<f64> = if rng.random::<f64>() < 0.9 {
                (0..dims)
                    .map(|k| {
                        let (x, y) = (pop[pa][k], pop[pb][k]);
                        let (lo, hi) = (x.min(y), x.max(y));
                        let ext = 0.5 * (hi - lo);
                        rng.random_range(lo - ext..=hi + ext)
                    })
                    .collect()
            } else {
                pop[pa].clone()
            };
            for (k, g) in child.iter_mut().enumerate() {
                if rng.random::<f64>() < mutation_rate {
                    let z: f64 = rng.sample(StandardNormal);
                    *g += 0.1 * (1.0 - enc.lower(k)) * z;
                }
            }
            enc.clamp(&mut child);
            next_fit.push(enc.fitness(&child));
            next.push(child);
        }
        pop = next;
        fit = next_fit;
        generations += 1;
        trace.push(fit[best_index(&fit)]);
    }
    let best = best_index(&fit);
    enc.finish(&pop[best], trace, generations)
}

/// Global-best particle swarm with constriction coefficients, velocity
/// clamping, and a restart of the swarm around the incumbent after a run of
/// iterations without improvement.
pub fn pso_solve<R: Rng + ?Sized>(
    scenario: &MimoScenario,
    channels: &MimoChannels,
    surface: &SurfaceModel,
    options: &HeuristicOptions,
    rng: &mut R,
) -> Result<AoState> {
    const INERTIA: f64 = 0.7298;
    const PULL: f64 = 1.49618;
    const PATIENCE: usize = 25;
    let enc = Encoding {
        scenario,
        channels,
        surface,
        noise: NoiseModel::from(scenario),
        penalty: options.penalty,
        counter: EvalCounter::default(),
    };
    let swarm = options.population.max(2);
    let dims = enc.dims();
    let v_max: Vec<f64> = (0..dims).map(|k| 0.2 * (1.0 - enc.lower(k))).collect();
    let mut pos: Vec<Vec<f64>> = (0..swarm).map(|_| enc.random(rng)).collect();
    let mut vel: Vec<Vec<f64>> = (0..swarm)
        .map(|_| {
            (0..dims)
                .map(|k| rng.random_range(-v_max[k]..=v_max[k]))
                .collect()
        })
        .collect();
    let mut personal = pos.clone();
    let mut personal_fit: Vec<f64> = pos.iter().map(|p| enc.fitness(p)).collect();
    let mut g = best_index(&personal_fit);
    let mut global = personal[g].clone();
    let mut global_fit = personal_fit[g];
    let mut trace = vec![global_fit];
    let mut iterations = 0;
    let mut stagnant = 0;
    while enc.counter.get() + swarm <= options.evaluations.max(swarm) {
        if stagnant >= PATIENCE {
            for i in 0..swarm {
                pos[i] = enc.random(rng);
                vel[i] = (0..dims)
                    .map(|k| rng.random_range(-v_max[k]..=v_max[k]))
                    .collect();
                personal[i] = pos[i].clone();
                personal_fit[i] = f64::NEG_INFINITY;
            }
            stagnant = 0;
        }
        for i in 0..swarm {
            for k in 0..dims {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = INERTIA * vel[i][k]
                    + PULL * r1 * (personal[i][k] - pos[i][k])
                    + PULL * r2 * (global[k] - pos[i][k]);
                vel[i][k] = v.clamp(-v_max[k], v_max[k]);
                pos[i][k] += vel[i][k];
            }
            enc.clamp(&mut pos[i]);
            let f = enc.fitness(&pos[i]);
            if f > personal_fit[i] {
                personal_fit[i] = f;
                personal[i] = pos[i].clone();
            }
        }
        g = best_index(&personal_fit);
        if personal_fit[g] > global_fit {
            global_fit = personal_fit[g];
            global = personal[g].clone();
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        iterations += 1;
        trace.push(global_fit);
    }
    enc.finish(&global, trace, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo_ao::scenario::sample_channels;
    use crate::rng::stream;
    use nalgebra::SymmetricEigen;

    fn toy() -> (MimoScenario, MimoChannels, SurfaceModel) {
        let s = MimoScenario {
            m_t: 2,
            m_r: 2,
            streams: 1,
            n: 1,
            n_active: 1,
            p_ris: 0.03,
            ..MimoScenario::default()
        }
        .with_rho(1.0);
        let ch = sample_channels(&s, &mut stream(3, 0));
        let surf = SurfaceModel::from_scenario(&s).unwrap();
        (s, ch, surf)
    }

    /// Best single-stream rate over a dense `(R, C)` grid with the
    /// dominant-eigenvector precoder.
    fn grid_oracle(s: &MimoScenario, ch: &MimoChannels, surf: &SurfaceModel) -> f64 {
        let c = surf.active.circuit;
        let noise = NoiseModel::from(s);
        let mut best = f64::NEG_INFINITY;
        let pts = 300;
        for i in 0..=pts {
            let r = c.r_range.0 + (c.r_range.1 - c.r_range.0) * i as f64 / pts as f64;
            if power_for_resistance(r, &surf.diode).unwrap() > s.p_ris {
                continue;
            }
            for j in 0..=pts {
                let cap = c.c_range.0 + (c.c_range.1 - c.c_range.0) * j as f64 / pts as f64;
                let Ok(g) = element_reflection(cap, r, &c) else {
                    continue;
                };
                let link = LinkModel::new(ch, &[g], &noise).unwrap();
                let m = link.h_eff.adjoint() * link.solve_noise(&link.h_eff);
                let top = SymmetricEigen::new(m)
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max);
                best = best.max((1.0 + s.p_t * top).log2());
            }
        }
        best
    }

    #[test]
    fn large_budget_reaches_grid_optimum() {
        let (s, ch, surf) = toy();
        let oracle = grid_oracle(&s, &ch, &surf);
        let opts = HeuristicOptions {
            evaluations: 20000,
            ..HeuristicOptions::default()
        };
        let ga = ga_solve(&s, &ch, &surf, &opts, &mut stream(1, 0)).unwrap();
        let pso = pso_solve(&s, &ch, &surf, &opts, &mut stream(1, 1)).unwrap();
        assert!(ga.rate >= 0.99 * oracle, "ga {} vs {oracle}", ga.rate);
        assert!(pso.rate >= 0.99 * oracle, "pso {} vs {oracle}", pso.rate);
    }

    #[test]
    fn respects_budgets_and_evaluation_count() {
        let s = MimoScenario {
            n: 8,
            n_active: 8,
            m_t: 2,
            m_r: 2,
            streams: 2,
            p_ris: 0.15,
            ..MimoScenario::default()
        };
        let ch = sample_channels(&s, &mut stream(4, 0));
        let surf = SurfaceModel::from_scenario(&s).unwrap();
        let opts = HeuristicOptions {
            evaluations: 150,
            ..HeuristicOptions::default()
        };
        for st in [
            ga_solve(&s, &ch, &surf, &opts, &mut stream(2, 0)).unwrap(),
            pso_solve(&s, &ch, &surf, &opts, &mut stream(2, 1)).unwrap(),
        ] {
            assert!(st.evaluations <= 150 + 1);
            assert!(st.ris_power <= s.p_ris * (1.0 + 1e-9));
            assert!(precoder_power(&st.v) <= s.p_t * (1.0 + 1e-9));
            assert!(st.rate_trace.windows(2).all(|w| w[1] >= w[0]));
            for (n, g) in st.gamma.iter().enumerate() {
                assert!(
                    (Complex64::from_polar(1.0, st.config.phases[n]) * g.norm() - g).norm() < 1e-9
                );
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (s, ch, surf) = toy();
        let opts = HeuristicOptions {
            evaluations: 200,
            ..HeuristicOptions::default()
        };
        let a = ga_solve(&s, &ch, &surf, &opts, &mut stream(9, 0)).unwrap();
        let b = ga_solve(&s, &ch, &surf, &opts, &mut stream(9, 0)).unwrap();
        assert_eq!(a.rate.to_bits(), b.rate.to_bits());
        let a = pso_solve(&s, &ch, &surf, &opts, &mut stream(9, 0)).unwrap();
        let b = pso_solve(&s, &ch, &surf, &opts, &mut stream(9, 0)).unwrap();
        assert_eq!(a.rate.to_bits(), b.rate.to_bits());
    }
}
