use crate::{Error, Result, TaskId};

/// Default offset added to the adapted shape parameter.
pub const DEFAULT_ALPHA_BAR: f64 = 1.0;
/// Default success-ratio threshold above which exploration switches off.
pub const DEFAULT_RHO_BAR: f64 = 0.1;
/// Default EMA smoothing factor.
pub const DEFAULT_TAU: f64 = 0.01;

/// Per-task exponential moving averages of episode success.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTracker {
    rho: Vec<f64>,
    tau: f64,
    rho_bar: f64,
    alpha_bar: f64,
}

impl SuccessTracker {
    pub fn new(n_tasks: usize, tau: f64, rho_bar: f64, alpha_bar: f64) -> Result<Self> {
        if n_tasks == 0 {
            return Err(Error::domain("tracker needs at least one task"));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::domain(format!("tau must lie in (0, 1], got {tau}")));
        }
        check_rho_bar(rho_bar)?;
        if !(alpha_bar >= 0.0 && alpha_bar.is_finite()) {
            return Err(Error::domain(format!("alpha_bar must be >= 0, got {alpha_bar}")));
        }
        Ok(Self {
            rho: vec![0.0; n_tasks],
            tau,
            rho_bar,
            alpha_bar,
        })
    }

    pub fn with_defaults(n_tasks: usize) -> Result<Self> {
        Self::new(n_tasks, DEFAULT_TAU, DEFAULT_RHO_BAR, DEFAULT_ALPHA_BAR)
    }

    pub fn n_tasks(&self) -> usize {
        self.rho.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    pub fn rho(&self, task: TaskId) -> f64 {
        self.rho[task.index()]
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rho
    }

    /// Overwrites one ratio. Used to pin the tracker in tests and examples.
    pub fn set_rho(&mut self, task: TaskId, rho: f64) -> Result<()> {
        task.check(self.n_tasks())?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::domain(format!("success ratio must lie in [0, 1], got {rho}")));
        }
        self.rho[task.index()] = rho;
        Ok(())
    }

    /// Folds one episode outcome into the task's ratio and returns the new value.
    pub fn update(&mut self, task: TaskId, success: bool) -> Result<f64> {
        task.check(self.n_tasks())?;
        let target = if success { 1.0 } else { 0.0 };
        let rho = &mut self.rho[task.index()];
        *rho = ((1.0 - self.tau) * *rho + self.tau * target).clamp(0.0, 1.0);
        Ok(*rho)
    }

    /// Shape parameter for the task's current ratio.
    pub fn alpha(&self, task: TaskId) -> f64 {
        compute_alpha(self.rho(task), self.rho_bar, self.alpha_bar).expect("rho_bar validated at construction")
    }

    pub fn exploration_enabled(&self, task: TaskId) -> bool {
        exploration_enabled(self.rho(task), self.rho_bar)
    }

    /// True once any task's ratio has crossed the threshold.
    pub fn any_above_threshold(&self) -> bool {
        self.rho.iter().any(|&r| r > self.rho_bar)
    }
}

fn check_rho_bar(rho_bar: f64) -> Result<()> {
    if rho_bar > 0.0 && rho_bar < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rho_bar must lie in (0, 1), got {rho_bar}")))
    }
}

/// `alpha_bar + rho_bar^-(rho / rho_bar)`, strictly increasing in `rho`.
pub fn compute_alpha(rho: f64, rho_bar: f64, alpha_bar: f64) -> Result<f64> {
    check_rho_bar(rho_bar)?;
    Ok(alpha_bar + rho_bar.powf(-(rho / rho_bar)))
}

/// Exploration stays on until the ratio strictly exceeds the threshold.
pub fn exploration_enabled(rho: f64, rho_bar: f64) -> bool {
    rho <= rho_bar
}
