use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest hidden-layer width.
pub const MAX_WIDTH: usize = 8000;
/// Smallest width drawn by the `random` pattern.
pub const RANDOM_MIN_WIDTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchPattern {
    Up,
    Down,
    UpDown,
    DownUp,
    Random,
}

impl ArchPattern {
    pub const ALL: [ArchPattern; 5] = [
        ArchPattern::Up,
        ArchPattern::Down,
        ArchPattern::UpDown,
        ArchPattern::DownUp,
        ArchPattern::Random,
    ];
}

/// Hidden-layer shape request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub pattern: ArchPattern,
    pub depth: usize,
    pub base_width: usize,
    #[serde(default = "default_max_width")]
    pub max_width: usize,
    /// Layer index of the widest (`up-down`) or narrowest (`down-up`) layer;
    /// `None` places it in the middle.
    #[serde(default)]
    pub turn: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_width() -> usize {
    MAX_WIDTH
}

impl ArchSpec {
    pub fn new(pattern: ArchPattern, depth: usize, base_width: usize) -> Self {
        Self {
            pattern,
            depth,
            base_width,
            max_width: MAX_WIDTH,
            turn: None,
            seed: 0,
        }
    }
}

/// Hidden-layer widths: doubling or halving per layer, capped at `max_width`
/// and floored at 1, or uniform draws from `[32, max_width]` for `random`.
pub fn gen_architecture(spec: &ArchSpec) -> Result<Vec<usize>> {
    if spec.depth < 1 || spec.base_width < 1 || spec.max_width < 1 {
        return Err(Error::config("depth, base width and max width must be at least 1"));
    }
    let d = spec.depth;
    let turn = spec.turn.unwrap_or((d - 1) / 2);
    if turn >= d {
        return Err(Error::config(format!("turn {turn} must be below depth {d}")));
    }
    let cap = |w: usize| w.clamp(1, spec.max_width);
    let mut widths = Vec::with_capacity(d);
    let mut w = cap(spec.base_width);
    match spec.pattern {
        ArchPattern::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let lo = RANDOM_MIN_WIDTH.min(spec.max_width);
            return Ok((0..d).map(|_| rng.random_range(lo..=spec.max_width)).collect());
        }
        _ => {
            widths.push(w);
            for i in 1..d {
                let grow = match spec.pattern {
                    ArchPattern::Up => true,
                    ArchPattern::Down => false,
                    ArchPattern::UpDown => i <= turn,
                    ArchPattern::DownUp => i > turn,
                    ArchPattern::Random => unreachable!(),
                };
                w = if grow { cap(w.saturating_mul(2)) } else { cap(w / 2) };
                widths.push(w);
            }
        }
    }
    Ok(widths)
}
