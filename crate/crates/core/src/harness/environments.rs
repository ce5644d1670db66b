//! The built-in experiment environments: a 3-armed bandit and a 5-state,
//! 5-action MDP, each with a uniform and a hard initialization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mdp::{bandit_as_mdp, MdpDefinition, PolicyParams, TabularMdp};

pub const BANDIT_REWARDS: [f64; 3] = [1.0, 0.99, 0.0];
/// Puts the least probability on the best arm.
pub const BANDIT_HARD_INIT: [f64; 3] = [1.0, 3.0, 5.0];

pub const MDP_DISCOUNT: f64 = 0.9;
pub const MDP_RHO: [f64; 5] = [0.3, 0.2, 0.1, 0.15, 0.25];
pub const MDP_REWARD: [[f64; 5]; 5] = [
    [1.0, 0.8, 0.6, 0.7, 0.4],
    [0.5, 0.3, 0.1, 1.0, 0.6],
    [0.6, 0.9, 0.8, 0.7, 1.0],
    [0.1, 0.2, 0.6, 0.7, 0.4],
    [0.8, 0.4, 0.6, 0.2, 0.9],
];
pub const MDP_HARD_INIT: [[f64; 5]; 5] = [
    [1.0, 2.0, 3.0, 4.0, 5.0],
    [3.0, 4.0, 5.0, 1.0, 2.0],
    [5.0, 2.0, 3.0, 4.0, 1.0],
    [5.0, 4.0, 2.0, 1.0, 3.0],
    [2.0, 4.0, 3.0, 5.0, 1.0],
];
/// One matrix per source state, laid out `[next_state][action]`: each
/// column is the next-state distribution of one action.
pub const MDP_TRANSITION_COLUMNS: [[[f64; 5]; 5]; 5] = [
    [
        [0.1, 0.6, 0.5, 0.4, 0.2],
        [0.5, 0.1, 0.1, 0.3, 0.1],
        [0.1, 0.1, 0.1, 0.1, 0.1],
        [0.2, 0.1, 0.2, 0.1, 0.1],
        [0.1, 0.1, 0.1, 0.1, 0.5],
    ],
    [
        [0.1, 0.4, 0.1, 0.4, 0.2],
        [0.5, 0.1, 0.4, 0.1, 0.2],
        [0.2, 0.2, 0.3, 0.1, 0.2],
        [0.1, 0.2, 0.1, 0.1, 0.2],
        [0.1, 0.1, 0.1, 0.3, 0.2],
    ],
    [
        [0.6, 0.2, 0.3, 0.1, 0.2],
        [0.1, 0.4, 0.3, 0.4, 0.1],
        [0.1, 0.1, 0.2, 0.3, 0.1],
        [0.1, 0.2, 0.1, 0.1, 0.1],
        [0.1, 0.1, 0.1, 0.1, 0.5],
    ],
    [
        [0.6, 0.1, 0.2, 0.4, 0.5],
        [0.1, 0.5, 0.1, 0.3, 0.1],
        [0.1, 0.1, 0.1, 0.1, 0.1],
        [0.1, 0.2, 0.1, 0.1, 0.2],
        [0.1, 0.1, 0.5, 0.1, 0.1],
    ],
    [
        [0.2, 0.4, 0.4, 0.1, 0.2],
        [0.2, 0.1, 0.1, 0.4, 0.5],
        [0.2, 0.2, 0.1, 0.2, 0.1],
        [0.2, 0.2, 0.3, 0.1, 0.1],
        [0.2, 0.1, 0.1, 0.2, 0.1],
    ],
];

pub fn three_arm_bandit() -> TabularMdp {
    bandit_as_mdp(&BANDIT_REWARDS).expect("bandit constants are valid")
}

pub fn five_state_definition(discount: f64) -> MdpDefinition {
    let transition = MDP_TRANSITION_COLUMNS
        .iter()
        .map(|m| (0..5).map(|a| (0..5).map(|next| m[next][a]).collect()).collect())
        .collect();
    MdpDefinition {
        n_states: 5,
        n_actions: 5,
        gamma: discount,
        rho: MDP_RHO.to_vec(),
        reward: MDP_REWARD.iter().map(|r| r.to_vec()).collect(),
        transition,
    }
}

pub fn five_state_mdp(discount: f64) -> Result<TabularMdp> {
    TabularMdp::try_from(five_state_definition(discount))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Uniform,
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinEnv {
    BanditUniform,
    BanditHard,
    MdpUniform,
    MdpHard,
}

impl BuiltinEnv {
    pub const ALL: [BuiltinEnv; 4] = [
        BuiltinEnv::BanditUniform,
        BuiltinEnv::BanditHard,
        BuiltinEnv::MdpUniform,
        BuiltinEnv::MdpHard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinEnv::BanditUniform => "bandit-uniform",
            BuiltinEnv::BanditHard => "bandit-hard",
            BuiltinEnv::MdpUniform => "mdp-uniform",
            BuiltinEnv::MdpHard => "mdp-hard",
        }
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, BuiltinEnv::BanditUniform | BuiltinEnv::BanditHard)
    }

    pub fn default_init(self) -> InitKind {
        match self {
            BuiltinEnv::BanditUniform | BuiltinEnv::MdpUniform => InitKind::Uniform,
            BuiltinEnv::BanditHard | BuiltinEnv::MdpHard => InitKind::Hard,
        }
    }

    /// 500 iterations for bandits, 5000 for the MDP.
    pub fn default_iterations(self) -> usize {
        if self.is_bandit() {
            500
        } else {
            5000
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }
}

impl fmt::Display for BuiltinEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinEnv {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "environment",
                name: s.to_string(),
                valid: Self::valid_names(),
            })
    }
}

/// A built-in MDP together with both of its initial logit tables.
#[derive(Clone, Debug)]
pub struct BuiltinEnvironment {
    pub env: BuiltinEnv,
    pub mdp: TabularMdp,
    pub uniform_init: PolicyParams,
    pub hard_init: PolicyParams,
}

impl BuiltinEnvironment {
    pub fn init(&self, kind: InitKind) -> &PolicyParams {
        match kind {
            InitKind::Uniform => &self.uniform_init,
            InitKind::Hard => &self.hard_init,
        }
    }

    /// Logits matching the environment name.
    pub fn default_params(&self) -> &PolicyParams {
        self.init(self.env.default_init())
    }
}

pub fn builtin_environment(name: &str) -> Result<BuiltinEnvironment> {
    let env: BuiltinEnv = name.parse()?;
    Ok(if env.is_bandit() {
        BuiltinEnvironment {
            env,
            mdp: three_arm_bandit(),
            uniform_init: PolicyParams::zeros(1, 3),
            hard_init: PolicyParams::from_rows(vec![BANDIT_HARD_INIT.to_vec()])?,
        }
    } else {
        BuiltinEnvironment {
            env,
            mdp: five_state_mdp(MDP_DISCOUNT)?,
            uniform_init: PolicyParams::zeros(5, 5),
            hard_init: PolicyParams::from_rows(MDP_HARD_INIT.iter().map(|r| r.to_vec()).collect())?,
        }
    })
}

/// Reads an MDP file: JSON when the extension is `.json`, TOML otherwise.
/// Probabilities and rewards are validated on load.
pub fn load_mdp_file(path: &Path) -> Result<TabularMdp> {
    TabularMdp::try_from(read_mdp_definition(path)?)
}

/// Parses an MDP file without validating it.
pub fn read_mdp_definition(path: &Path) -> Result<MdpDefinition> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Writes an MDP file in the format [`load_mdp_file`] reads.
pub fn write_mdp_file(mdp: &TabularMdp, path: &Path) -> Result<()> {
    let def = mdp.to_definition();
    let text = if path.extension().is_some_and(|e| e == "json") {
        serde_json::to_string_pretty(&def)?
    } else {
        toml::to_string(&def).map_err(|e| Error::Config(e.to_string()))?
    };
    super::trace::write_atomically(path, text.as_bytes())
}
