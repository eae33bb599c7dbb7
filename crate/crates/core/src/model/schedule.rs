use std::fmt;
use std::str::FromStr;

/// Probability of feeding the gold previous action during training.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SamplingSchedule {
    #[default]
    TeacherForcing,
    Fixed(f64),
    /// `p = base^k` at 0-based epoch `k`.
    ExponentialDecay(f64),
    /// `p` falls linearly from 1 at the first epoch to 0 at the last.
    LinearDecay,
}

impl SamplingSchedule {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            SamplingSchedule::Fixed(p) | SamplingSchedule::ExponentialDecay(p)
                if !(0.0..=1.0).contains(&p) =>
            {
                Err(format!("schedule parameter {p} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn gold_probability(&self, epoch: usize, total_epochs: usize) -> f64 {
        match *self {
            SamplingSchedule::TeacherForcing => 1.0,
            SamplingSchedule::Fixed(p) => p,
            SamplingSchedule::ExponentialDecay(base) => base.powi(epoch as i32),
            SamplingSchedule::LinearDecay => {
                if total_epochs <= 1 {
                    1.0
                } else {
                    1.0 - epoch as f64 / (total_epochs - 1) as f64
                }
            }
        }
    }
}

impl FromStr for SamplingSchedule {
    type Err = String;

    /// `tf`, `fixed:P`, `ed:BASE` or `ld`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_p = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("bad schedule parameter `{v}`"))
        };
        let sched = match s.split_once(':') {
            None if s == "tf" || s == "teacher-forcing" => SamplingSchedule::TeacherForcing,
            None if s == "ld" || s == "linear" => SamplingSchedule::LinearDecay,
            Some(("fixed", p)) => SamplingSchedule::Fixed(parse_p(p)?),
            Some(("ed", p)) => SamplingSchedule::ExponentialDecay(parse_p(p)?),
            _ => {
                return Err(format!(
                    "unknown schedule `{s}` (tf | fixed:P | ed:BASE | ld)"
                ))
            }
        };
        sched.validate()?;
        Ok(sched)
    }
}

impl fmt::Display for SamplingSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingSchedule::TeacherForcing => f.write_str("tf"),
            SamplingSchedule::Fixed(p) => write!(f, "fixed:{p}"),
            SamplingSchedule::ExponentialDecay(b) => write!(f, "ed:{b}"),
            SamplingSchedule::LinearDecay => f.write_str("ld"),
        }
    }
}
