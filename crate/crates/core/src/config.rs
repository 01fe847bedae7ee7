//! Flat `key = value` run configuration covering every tunable in the
//! pipeline. Unknown keys are rejected and every value is range-checked
//! against the owning module's invariants.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::Material;
use crate::topopt::TopOptConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMetric {
    PixDiff,
    Dsim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// Reward = normalized diversity of the current 25-slot grid.
    State,
    /// Reward = increment of the normalized diversity over the last step.
    Increment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    CachedExact,
    Surrogate,
}

#[derive(Debug, Clone)]
pub struct MaskConfig {
    pub r_in_frac: f64,
    pub r_out_frac: f64,
    pub hub_band: f64,
    pub rim_band: f64,
}

#[derive(Debug, Clone)]
pub struct SurrogateTrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub weight_decay: f64,
    pub noise_variance: f64,
    /// Interpret the augmentation parameter 0.002 as a standard deviation
    /// instead of a variance.
    pub noise_as_stddev: bool,
    pub rotation_max_deg: u32,
    pub max_steps: usize,
    pub eval_interval: usize,
    /// Steps at which checkpoints are written (ablation uses 3 of them).
    pub checkpoint_steps: Vec<usize>,
    pub seed: u64,
}

impl Default for SurrogateTrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch: 16,
            weight_decay: 1e-4,
            noise_variance: 0.002,
            noise_as_stddev: false,
            rotation_max_deg: 359,
            max_steps: 10_000,
            eval_interval: 500,
            checkpoint_steps: vec![500, 2_000, 10_000],
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub lr: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub envs: usize,
    pub update_episodes: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub vae_coef: f64,
    pub grad_clip: f64,
    pub weight_decay: f64,
    /// Environment steps per env over the whole training run.
    pub total_steps: usize,
    pub embedding: usize,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            lr: 1e-4,
            minibatch: 32,
            epochs: 4,
            envs: 64,
            update_episodes: 5,
            value_coef: 0.5,
            entropy_coef: 0.01,
            vae_coef: 0.1,
            grad_clip: 0.5,
            weight_decay: 1e-4,
            total_steps: 5_000,
            embedding: 256,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    /// Average-pool factor applied to slots for the state tensor.
    pub pool: usize,
    pub reward_metric: RewardMetric,
    pub reward_mode: RewardMode,
    pub backend: BackendKind,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            pool: 4,
            reward_metric: RewardMetric::PixDiff,
            reward_mode: RewardMode::State,
            backend: BackendKind::CachedExact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub ssim_window: usize,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
    pub select_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            ssim_window: 11,
            ssim_k1: 1e-4,
            ssim_k2: 9e-4,
            select_threshold: 0.97,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub g: usize,
    pub mask: MaskConfig,
    pub ref_count: usize,
    pub train_fraction: f64,
    pub topopt: TopOptConfig,
    pub surrogate: SurrogateTrainConfig,
    pub ppo: PpoConfig,
    pub env: EnvConfig,
    pub metric: MetricConfig,
    /// Agent training length for the surrogate-error ablation runs.
    pub ablation_agent_steps: usize,
    pub run_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            g: 64,
            mask: MaskConfig {
                r_in_frac: 0.15,
                r_out_frac: 0.48,
                hub_band: 2.0,
                rim_band: 2.0,
            },
            ref_count: 80,
            train_fraction: 0.8,
            topopt: TopOptConfig::default(),
            surrogate: SurrogateTrainConfig::default(),
            ppo: PpoConfig::default(),
            env: EnvConfig::default(),
            metric: MetricConfig::default(),
            ablation_agent_steps: 2_000,
            run_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn mask(&self) -> Result<std::sync::Arc<crate::design::AnnulusMask>> {
        crate::design::AnnulusMask::new(
            self.g,
            self.mask.r_in_frac * self.g as f64,
            self.mask.r_out_frac * self.g as f64,
            self.mask.hub_band,
            self.mask.rim_band,
        )
    }

    /// Effective noise variance after the stddev/variance interpretation
    /// switch.
    pub fn noise_variance(&self) -> f64 {
        if self.surrogate.noise_as_stddev {
            self.surrogate.noise_variance * self.surrogate.noise_variance
        } else {
            self.surrogate.noise_variance
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", ln + 1))
            })?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key {}", k.trim())));
            }
        }
        Self::from_kv(kv)
    }

    fn from_kv(mut kv: BTreeMap<String, String>) -> Result<Self> {
        let mut c = Self::default();
        macro_rules! take {
            ($key:literal, $slot:expr, $parse:expr) => {
                if let Some(v) = kv.remove($key) {
                    $slot = $parse(&v)
                        .map_err(|e: String| Error::Config(format!("{}: {}", $key, e)))?;
                }
            };
        }
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        fn boolean(v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("cannot parse {v:?} as bool")),
            }
        }

        take!("seed", c.seed, num);
        take!("g", c.g, num);
        take!("mask.r_in_frac", c.mask.r_in_frac, num);
        take!("mask.r_out_frac", c.mask.r_out_frac, num);
        take!("mask.hub_band", c.mask.hub_band, num);
        take!("mask.rim_band", c.mask.rim_band, num);
        take!("refs.count", c.ref_count, num);
        take!("refs.train_fraction", c.train_fraction, num);
        take!("topopt.penal", c.topopt.penal, num);
        take!("topopt.filter_radius", c.topopt.filter_radius, num);
        take!("topopt.move_limit", c.topopt.move_limit, num);
        take!("topopt.damping", c.topopt.damping, num);
        take!("topopt.max_iters", c.topopt.max_iters, num);
        take!("topopt.change_tol", c.topopt.change_tol, num);
        take!("topopt.volume_fraction", c.topopt.volume_fraction, num);
        take!("topopt.bisection_tol", c.topopt.bisection_tol, num);
        take!("topopt.e_min", c.topopt.e_min, num);
        take!("topopt.init_floor", c.topopt.init_floor, num);
        take!("fem.youngs", c.topopt.material.e, num);
        take!("fem.poisson", c.topopt.material.nu, num);
        take!("fem.normal_magnitude", c.topopt.normal_magnitude, num);
        take!("fem.contact_arc_deg", c.topopt.contact_arc_deg, num);
        take!("surrogate.lr", c.surrogate.lr, num);
        take!("surrogate.batch", c.surrogate.batch, num);
        take!("surrogate.weight_decay", c.surrogate.weight_decay, num);
        take!("surrogate.noise_variance", c.surrogate.noise_variance, num);
        take!("surrogate.noise_as_stddev", c.surrogate.noise_as_stddev, boolean);
        take!("surrogate.rotation_max_deg", c.surrogate.rotation_max_deg, num);
        take!("surrogate.max_steps", c.surrogate.max_steps, num);
        take!("surrogate.eval_interval", c.surrogate.eval_interval, num);
        take!("surrogate.seed", c.surrogate.seed, num);
        if let Some(v) = kv.remove("surrogate.checkpoint_steps") {
            c.surrogate.checkpoint_steps = v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config("surrogate.checkpoint_steps".into()))?;
        }
        take!("ppo.gamma", c.ppo.gamma, num);
        take!("ppo.gae_lambda", c.ppo.gae_lambda, num);
        take!("ppo.clip_eps", c.ppo.clip_eps, num);
        take!("ppo.lr", c.ppo.lr, num);
        take!("ppo.minibatch", c.ppo.minibatch, num);
        take!("ppo.epochs", c.ppo.epochs, num);
        take!("ppo.envs", c.ppo.envs, num);
        take!("ppo.update_episodes", c.ppo.update_episodes, num);
        take!("ppo.value_coef", c.ppo.value_coef, num);
        take!("ppo.entropy_coef", c.ppo.entropy_coef, num);
        take!("ppo.vae_coef", c.ppo.vae_coef, num);
        take!("ppo.grad_clip", c.ppo.grad_clip, num);
        take!("ppo.weight_decay", c.ppo.weight_decay, num);
        take!("ppo.total_steps", c.ppo.total_steps, num);
        take!("ppo.embedding", c.ppo.embedding, num);
        take!("ppo.seed", c.ppo.seed, num);
        take!("env.pool", c.env.pool, num);
        if let Some(v) = kv.remove("env.reward_metric") {
            c.env.reward_metric = match v.as_str() {
                "pixdiff" => RewardMetric::PixDiff,
                "dsim" => RewardMetric::Dsim,
                _ => return Err(Error::Config(format!("env.reward_metric {v:?}"))),
            };
        }
        if let Some(v) = kv.remove("env.reward_mode") {
            c.env.reward_mode = match v.as_str() {
                "state" => RewardMode::State,
                "increment" => RewardMode::Increment,
                _ => return Err(Error::Config(format!("env.reward_mode {v:?}"))),
            };
        }
        if let Some(v) = kv.remove("env.backend") {
            c.env.backend = match v.as_str() {
                "cached" | "cached_exact" => BackendKind::CachedExact,
                "surrogate" => BackendKind::Surrogate,
                _ => return Err(Error::Config(format!("env.backend {v:?}"))),
            };
        }
        take!("metric.ssim_window", c.metric.ssim_window, num);
        take!("metric.ssim_k1", c.metric.ssim_k1, num);
        take!("metric.ssim_k2", c.metric.ssim_k2, num);
        take!("metric.select_threshold", c.metric.select_threshold, num);
        take!("ablate.agent_steps", c.ablation_agent_steps, num);
        if let Some(v) = kv.remove("paths.run_dir") {
            c.run_dir = PathBuf::from(v);
        }

        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if ![32, 64, 128].contains(&self.g) {
            return Err(Error::Config(format!("g = {} not in {{32, 64, 128}}", self.g)));
        }
        self.mask()?;
        if self.ref_count == 0 {
            return Err(Error::Config("refs.count must be positive".into()));
        }
        if !(0.0 < self.train_fraction && self.train_fraction < 1.0) {
            return Err(Error::Config("refs.train_fraction must be in (0,1)".into()));
        }
        self.topopt.validate()?;
        let m: Material = self.topopt.material;
        if m.e <= 0.0 || !(0.0..0.5).contains(&m.nu) {
            return Err(Error::Config("material outside E > 0, nu in [0, 0.5)".into()));
        }
        let s = &self.surrogate;
        if s.batch == 0 || s.max_steps == 0 || s.lr <= 0.0 || s.noise_variance < 0.0 {
            return Err(Error::Config("surrogate training config degenerate".into()));
        }
        if s.rotation_max_deg > 359 {
            return Err(Error::Config("rotation_max_deg must be <= 359".into()));
        }
        let p = &self.ppo;
        if !(0.0..=1.0).contains(&p.gamma)
            || !(0.0..=1.0).contains(&p.gae_lambda)
            || p.clip_eps <= 0.0
            || p.minibatch == 0
            || p.epochs == 0
            || p.envs == 0
            || p.update_episodes == 0
        {
            return Err(Error::Config("ppo config degenerate".into()));
        }
        for v in [p.value_coef, p.entropy_coef, p.vae_coef, p.weight_decay, p.grad_clip] {
            if v < 0.0 {
                return Err(Error::Config("ppo coefficients must be >= 0".into()));
            }
        }
        let rollout = p.envs * p.update_episodes * 5;
        if rollout % p.minibatch != 0 {
            return Err(Error::Config(format!(
                "minibatch {} must divide rollout size {rollout}",
                p.minibatch
            )));
        }
        if self.env.pool == 0 || self.g % self.env.pool != 0 {
            return Err(Error::Config(format!(
                "env.pool {} must divide g = {}",
                self.env.pool, self.g
            )));
        }
        if self.g % 8 != 0 {
            return Err(Error::Config("g must be divisible by 8".into()));
        }
        let mc = &self.metric;
        if mc.ssim_window % 2 == 0 || mc.ssim_window > self.g {
            return Err(Error::Config("ssim window must be odd and <= g".into()));
        }
        if !(0.0 < mc.select_threshold && mc.select_threshold < 1.0) {
            return Err(Error::Config("select_threshold must be in (0,1)".into()));
        }
        Ok(())
    }

    /// Serializes every knob back to the flat format (the run manifest
    /// embeds this).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        let c = self;
        let _ = write!(
            s,
            "seed = {}\ng = {}\nmask.r_in_frac = {}\nmask.r_out_frac = {}\nmask.hub_band = {}\nmask.rim_band = {}\nrefs.count = {}\nrefs.train_fraction = {}\n",
            c.seed, c.g, c.mask.r_in_frac, c.mask.r_out_frac, c.mask.hub_band, c.mask.rim_band, c.ref_count, c.train_fraction
        );
        let t = &c.topopt;
        let _ = write!(
            s,
            "topopt.penal = {}\ntopopt.filter_radius = {}\ntopopt.move_limit = {}\ntopopt.damping = {}\ntopopt.max_iters = {}\ntopopt.change_tol = {}\ntopopt.volume_fraction = {}\ntopopt.bisection_tol = {}\ntopopt.e_min = {}\ntopopt.init_floor = {}\nfem.youngs = {}\nfem.poisson = {}\nfem.normal_magnitude = {}\nfem.contact_arc_deg = {}\n",
            t.penal, t.filter_radius, t.move_limit, t.damping, t.max_iters, t.change_tol, t.volume_fraction, t.bisection_tol, t.e_min, t.init_floor, t.material.e, t.material.nu, t.normal_magnitude, t.contact_arc_deg
        );
        let su = &c.surrogate;
        let _ = write!(
            s,
            "surrogate.lr = {}\nsurrogate.batch = {}\nsurrogate.weight_decay = {}\nsurrogate.noise_variance = {}\nsurrogate.noise_as_stddev = {}\nsurrogate.rotation_max_deg = {}\nsurrogate.max_steps = {}\nsurrogate.eval_interval = {}\nsurrogate.checkpoint_steps = {}\nsurrogate.seed = {}\n",
            su.lr, su.batch, su.weight_decay, su.noise_variance, su.noise_as_stddev, su.rotation_max_deg, su.max_steps, su.eval_interval,
            su.checkpoint_steps.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","), su.seed
        );
        let p = &c.ppo;
        let _ = write!(
            s,
            "ppo.gamma = {}\nppo.gae_lambda = {}\nppo.clip_eps = {}\nppo.lr = {}\nppo.minibatch = {}\nppo.epochs = {}\nppo.envs = {}\nppo.update_episodes = {}\nppo.value_coef = {}\nppo.entropy_coef = {}\nppo.vae_coef = {}\nppo.grad_clip = {}\nppo.weight_decay = {}\nppo.total_steps = {}\nppo.embedding = {}\nppo.seed = {}\n",
            p.gamma, p.gae_lambda, p.clip_eps, p.lr, p.minibatch, p.epochs, p.envs, p.update_episodes, p.value_coef, p.entropy_coef, p.vae_coef, p.grad_clip, p.weight_decay, p.total_steps, p.embedding, p.seed
        );
        let _ = write!(
            s,
            "env.pool = {}\nenv.reward_metric = {}\nenv.reward_mode = {}\nenv.backend = {}\nmetric.ssim_window = {}\nmetric.ssim_k1 = {}\nmetric.ssim_k2 = {}\nmetric.select_threshold = {}\nablate.agent_steps = {}\npaths.run_dir = {}\n",
            c.env.pool,
            match c.env.reward_metric { RewardMetric::PixDiff => "pixdiff", RewardMetric::Dsim => "dsim" },
            match c.env.reward_mode { RewardMode::State => "state", RewardMode::Increment => "increment" },
            match c.env.backend { BackendKind::CachedExact => "cached", BackendKind::Surrogate => "surrogate" },
            c.metric.ssim_window, c.metric.ssim_k1, c.metric.ssim_k2, c.metric.select_threshold,
            c.ablation_agent_steps, c.run_dir.display()
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid_and_roundtrip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = c.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.g, c.g);
        assert_eq!(back.ppo.total_steps, c.ppo.total_steps);
        assert_eq!(back.surrogate.checkpoint_steps, c.surrogate.checkpoint_steps);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            RunConfig::parse("bogus.key = 1"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(RunConfig::parse("g = 48").is_err());
        assert!(RunConfig::parse("topopt.move_limit = 0").is_err());
        assert!(RunConfig::parse("ppo.minibatch = 7").is_err());
        assert!(RunConfig::parse("fem.poisson = 0.6").is_err());
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::parse("g = 32\nenv.reward_metric = dsim\nppo.envs = 8\nppo.minibatch = 8").unwrap();
        assert_eq!(c.g, 32);
        assert_eq!(c.env.reward_metric, RewardMetric::Dsim);
        assert_eq!(c.ppo.envs, 8);
    }
}
