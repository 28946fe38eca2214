//! Generational genetic search over scheme genomes.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::Simulator;
use crate::genome::{
    crossover, mutate, random_genome, CrossoverKind, Genome, GenomeLayout, MutationMode,
};
use crate::metrics::{DetectorModel, Evaluator};
use crate::scheme::Scheme;
use crate::target::{TargetGate, TargetKind};

// Pb within this distance of 1 counts as exactly heralded.
pub const PB_ONE_TOLERANCE: f64 = 1e-6;

/// `P` while below `p_min`, then `1000·F`.
pub fn fitness_f1(p: f64, f: f64, p_min: f64) -> f64 {
    if p < p_min {
        p
    } else {
        1000.0 * f
    }
}

/// `F` while below `f_min`, then `1000·P`.
pub fn fitness_f2(p: f64, f: f64, f_min: f64) -> f64 {
    if f < f_min {
        f
    } else {
        1000.0 * p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Fitness {
    F1 {
        p_min: f64,
    },
    F2 {
        f_min: f64,
        #[serde(default)]
        require_pb_one: bool,
    },
}

impl Fitness {
    /// Fitness value and whether the specie is past the threshold branch.
    pub fn score(&self, p: f64, f: f64, pb_min: Option<f64>) -> (f64, bool) {
        match *self {
            Fitness::F1 { p_min } => (fitness_f1(p, f, p_min), p >= p_min),
            Fitness::F2 {
                f_min,
                require_pb_one,
            } => {
                if f >= f_min
                    && require_pb_one
                    && !pb_min.is_some_and(|pb| pb >= 1.0 - PB_ONE_TOLERANCE)
                {
                    // discarded: capped just below the threshold
                    return (f.min(f_min) - 1e-9, false);
                }
                (fitness_f2(p, f, f_min), f >= f_min)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    #[serde(default = "default_fidelity_goal")]
    pub fidelity_goal: f64,
    /// Extra condition on P for stopping; 0 disables it.
    #[serde(default)]
    pub probability_goal: f64,
    pub max_generations: usize,
}

fn default_fidelity_goal() -> f64 {
    0.999
}

fn default_rate() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub parents: usize,
    #[serde(default = "default_rate")]
    pub mutation_rate: f64,
    #[serde(default)]
    pub mutation_mode: MutationMode,
    pub layout: GenomeLayout,
    #[serde(default)]
    pub crossover: CrossoverKind,
    pub fitness: Fitness,
    #[serde(default)]
    pub target: TargetKind,
    #[serde(default)]
    pub detector: DetectorModel,
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
    /// Carry the best specie of each generation over unchanged.
    #[serde(default)]
    pub elitism: bool,
    #[serde(default = "default_cap")]
    pub photon_cap: usize,
}

fn default_cap() -> usize {
    crate::fock::DEFAULT_PHOTON_CAP
}

impl GaConfig {
    /// Scaled-down defaults: G = 500, G_p = 80.
    pub fn desk(layout: GenomeLayout, fitness: Fitness, max_generations: usize, seed: u64) -> Self {
        GaConfig {
            population: 500,
            parents: 80,
            mutation_rate: 0.5,
            mutation_mode: MutationMode::PerSpecie,
            layout,
            crossover: CrossoverKind::SinglePoint,
            fitness,
            target: TargetKind::Cz,
            detector: DetectorModel::Pnr,
            stop: StopRule {
                fidelity_goal: 0.999,
                probability_goal: 0.0,
                max_generations,
            },
            seed,
            elitism: false,
            photon_cap: default_cap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        self.layout.validate()?;
        if self.population == 0 || self.parents == 0 || self.parents > self.population {
            return bad("need 0 < parents ≤ population");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        match self.fitness {
            Fitness::F1 { p_min } if !(p_min > 0.0 && p_min < 1.0) => {
                return bad("p_min must lie in (0, 1)")
            }
            Fitness::F2 { f_min, .. } if !(f_min > 0.0 && f_min < 1.0) => {
                return bad("f_min must lie in (0, 1)")
            }
            _ => {}
        }
        let photons = 2 + self.layout.ancilla_photons;
        Simulator::new(self.photon_cap).check_photons(photons)?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: GaConfig = crate::error::from_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GaConfig = crate::error::from_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSpecie {
    pub genome: Genome,
    pub fitness: f64,
    pub fidelity: f64,
    pub p: f64,
    pub pb_min: Option<f64>,
    /// Past the fitness threshold (and not discarded).
    pub qualifies: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_fidelity: f64,
    pub best_p: f64,
    pub best_ever_fitness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    GoalReached,
    MaxGenerations,
}

/// Loop state; serializable for checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaState {
    pub generation: usize,
    pub population: Vec<Genome>,
    pub rng: ChaCha8Rng,
    pub history: Vec<GenerationStats>,
    pub best_ever: Option<EvaluatedSpecie>,
    pub best_qualifying: Option<EvaluatedSpecie>,
    pub evaluations: usize,
    pub stopped: Option<StopReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub generations: usize,
    pub evaluations: usize,
    pub stop_reason: StopReason,
    pub history: Vec<GenerationStats>,
    /// Best specie past the fitness threshold; absent if none qualified.
    pub best: Option<EvaluatedSpecie>,
    pub best_scheme: Option<Scheme>,
}

/// Per-generation telemetry line.
#[derive(Clone, Debug, Serialize)]
pub struct Telemetry<'a> {
    #[serde(flatten)]
    pub stats: &'a GenerationStats,
    pub wall_time_s: f64,
}

pub struct GaEngine {
    config: GaConfig,
    target: TargetGate,
    eval: Evaluator,
}

impl GaEngine {
    pub fn new(config: GaConfig) -> Result<Self> {
        config.validate()?;
        Ok(GaEngine {
            target: TargetGate::of(config.target),
            eval: Evaluator::new(Simulator::new(config.photon_cap)),
            config,
        })
    }

    pub fn config(&self) -> &GaConfig {
        &self.config
    }

    /// Fresh random population.
    pub fn initial_state(&self) -> GaState {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let population = (0..self.config.population)
            .map(|_| random_genome(&self.config.layout, &mut rng))
            .collect();
        self.state_from(population, rng)
    }

    /// Starts from given genomes; missing slots are filled randomly.
    pub fn seeded_state(&self, seeds: Vec<Genome>) -> Result<GaState> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let layout = &self.config.layout;
        let mut population = Vec::with_capacity(self.config.population);
        for g in seeds.into_iter().take(self.config.population) {
            g.decode(layout)?;
            population.push(g.repaired(layout));
        }
        while population.len() < self.config.population {
            population.push(random_genome(layout, &mut rng));
        }
        Ok(self.state_from(population, rng))
    }

    fn state_from(&self, population: Vec<Genome>, rng: ChaCha8Rng) -> GaState {
        GaState {
            generation: 0,
            population,
            rng,
            history: Vec::new(),
            best_ever: None,
            best_qualifying: None,
            evaluations: 0,
            stopped: None,
        }
    }

    pub fn evaluate(&self, genome: &Genome) -> EvaluatedSpecie {
        let scored = genome.decode(&self.config.layout).and_then(|scheme| {
            self.eval
                .metrics_report(&scheme, &self.target, self.config.detector)
        });
        let (fidelity, p, pb_min) = match scored {
            Ok(r) => (
                r.fidelity,
                r.p,
                r.pb.iter()
                    .try_fold(f64::INFINITY, |m, pb| pb.map(|v| m.min(v))),
            ),
            Err(_) => (0.0, 0.0, None),
        };
        let (fitness, qualifies) = self.config.fitness.score(p, fidelity, pb_min);
        EvaluatedSpecie {
            genome: genome.clone(),
            fitness,
            fidelity,
            p,
            pb_min,
            qualifies,
        }
    }

    fn goal_met(&self, s: &EvaluatedSpecie) -> bool {
        s.qualifies
            && s.fidelity >= self.config.stop.fidelity_goal
            && s.p >= self.config.stop.probability_goal
    }

    /// Runs one generation; returns false once the search has stopped.
    pub fn step(&self, state: &mut GaState, telemetry: &mut dyn FnMut(&GenerationStats)) -> bool {
        if state.stopped.is_some() {
            return false;
        }
        if state.generation >= self.config.stop.max_generations {
            state.stopped = Some(StopReason::MaxGenerations);
            return false;
        }
        let evaluated: Vec<EvaluatedSpecie> = state
            .population
            .par_iter()
            .map(|g| self.evaluate(g))
            .collect();
        state.evaluations += evaluated.len();
        state.generation += 1;

        let mut order: Vec<usize> = (0..evaluated.len()).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (&evaluated[i], &evaluated[j]);
            b.fitness
                .total_cmp(&a.fitness)
                .then(b.p.total_cmp(&a.p))
                .then(i.cmp(&j))
        });
        let best = &evaluated[order[0]];
        if state
            .best_ever
            .as_ref()
            .is_none_or(|b| best.fitness > b.fitness)
        {
            state.best_ever = Some(best.clone());
        }
        if let Some(q) = order.iter().map(|&i| &evaluated[i]).find(|s| s.qualifies) {
            if state
                .best_qualifying
                .as_ref()
                .is_none_or(|b| q.fitness > b.fitness)
            {
                state.best_qualifying = Some(q.clone());
            }
        }
        let stats = GenerationStats {
            generation: state.generation,
            best_fitness: best.fitness,
            best_fidelity: best.fidelity,
            best_p: best.p,
            best_ever_fitness: state.best_ever.as_ref().map_or(best.fitness, |b| b.fitness),
        };
        telemetry(&stats);
        state.history.push(stats);

        if order.iter().any(|&i| self.goal_met(&evaluated[i])) {
            state.stopped = Some(StopReason::GoalReached);
            return false;
        }
        if state.generation >= self.config.stop.max_generations {
            state.stopped = Some(StopReason::MaxGenerations);
            return false;
        }

        let layout = &self.config.layout;
        let parents: Vec<&Genome> = order[..self.config.parents]
            .iter()
            .map(|&i| &evaluated[i].genome)
            .collect();
        let mut next = Vec::with_capacity(self.config.population);
        if self.config.elitism {
            next.push(parents[0].clone());
        }
        let rng = &mut state.rng;
        while next.len() < self.config.population {
            let (p1, p2) = if parents.len() >= 2 {
                let pick = sample(rng, parents.len(), 2);
                (parents[pick.index(0)], parents[pick.index(1)])
            } else {
                (parents[0], parents[0])
            };
            let child = crossover(p1, p2, layout, self.config.crossover, rng)
                .expect("parents share the layout");
            next.push(mutate(
                &child,
                layout,
                rng,
                self.config.mutation_rate,
                self.config.mutation_mode,
            ));
        }
        state.population = next;
        true
    }

    /// Runs to completion from `state`.
    pub fn run_from(
        &self,
        mut state: GaState,
        telemetry: &mut dyn FnMut(&GenerationStats),
    ) -> SearchReport {
        while self.step(&mut state, telemetry) {}
        self.report(&state)
    }

    pub fn run(&self) -> SearchReport {
        self.run_from(self.initial_state(), &mut |_| {})
    }

    pub fn report(&self, state: &GaState) -> SearchReport {
        let best = state.best_qualifying.clone();
        let best_scheme = best
            .as_ref()
            .and_then(|b| b.genome.decode(&self.config.layout).ok());
        SearchReport {
            generations: state.generation,
            evaluations: state.evaluations,
            stop_reason: state.stopped.unwrap_or(StopReason::MaxGenerations),
            history: state.history.clone(),
            best,
            best_scheme,
        }
    }
}

/// Runs a search from a fresh random population.
pub fn run_ga(config: GaConfig) -> Result<SearchReport> {
    Ok(GaEngine::new(config)?.run())
}

/// Wraps a telemetry sink so each line carries the wall time since `start`.
pub fn timed<'a>(
    start: Instant,
    mut sink: impl FnMut(Telemetry<'_>) + 'a,
) -> impl FnMut(&GenerationStats) + 'a {
    move |stats| {
        sink(Telemetry {
            stats,
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }
}
