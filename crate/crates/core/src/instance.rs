//! Learning instances: a parameter sampler, a family, and precision settings.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bits::BitString;
use crate::dist::Distribution;
use crate::error::{check_len, Error, Result};
use crate::family::{dist_vector, CircuitFamily, Family};
use crate::rng::Coins;

/// Precision `1/eps`, confidence `1/delta`, sample count `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnParams {
    pub eps: u64,
    pub delta: u64,
    pub t: u64,
}

impl LearnParams {
    pub fn new(eps: u64, delta: u64, t: u64) -> Result<Self> {
        let p = LearnParams { eps, delta, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps == 0 || self.delta == 0 || self.t == 0 {
            return Err(Error::Precondition(format!(
                "eps, delta and t must be at least 1 (got {}, {}, {})",
                self.eps, self.delta, self.t
            )));
        }
        Ok(())
    }
}

/// Where the parameter `z` comes from.
#[derive(Clone, Debug)]
pub enum Sampler {
    Explicit(Distribution),
    /// A circuit without parameters whose output is `z`.
    Circuit(CircuitFamily),
}

impl Sampler {
    pub fn out_bits(&self) -> usize {
        match self {
            Sampler::Explicit(d) => d.width(),
            Sampler::Circuit(c) => c.out_bits(),
        }
    }

    pub fn distribution(&self) -> Result<Distribution> {
        match self {
            Sampler::Explicit(d) => Ok(d.clone()),
            Sampler::Circuit(c) => dist_vector(c, BitString::EMPTY),
        }
    }

    pub fn draw(&self, coins_seed: u64, stream: u64) -> BitString {
        match self {
            Sampler::Explicit(d) => d.sample_with(1, &mut Coins::new(coins_seed, stream, 0))[0],
            Sampler::Circuit(c) => BitString::raw(c.sample_range(0, coins_seed, stream, 0, 1)[0], c.out_bits()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LearningInstance {
    pub sampler: Sampler,
    pub family: CircuitFamily,
    pub params: LearnParams,
    /// Target for agnostic experiments, if the instance names one.
    pub target: Option<Distribution>,
}

impl LearningInstance {
    pub fn new(sampler: Sampler, family: CircuitFamily, params: LearnParams) -> Result<Self> {
        if let Sampler::Circuit(c) = &sampler {
            if c.param_bits() != 0 {
                return Err(Error::Invalid("a circuit sampler must have param_bits = 0".into()));
            }
        }
        check_len(family.param_bits(), sampler.out_bits())?;
        params.validate()?;
        Ok(LearningInstance { sampler, family, params, target: None })
    }

    pub fn with_target(mut self, target: Distribution) -> Result<Self> {
        check_len(self.family.out_bits(), target.width())
            .map_err(|_| Error::Invalid("target width differs from the family's output width".into()))?;
        self.target = Some(target);
        Ok(self)
    }

    /// `{"sampler": circuit | distribution, "family": circuit,
    ///   "params": {"eps", "delta", "t"}, "target"?: distribution | mixture}`
    ///
    /// A mixture target reads `{"mixture": {"member": "0101", "uniform_weight": "1/10"}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| Error::Parse("instance must be a JSON object".into()))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "sampler" | "family" | "params" | "target") {
                return Err(Error::Parse(format!("unknown instance field {key:?}")));
            }
        }
        let field = |name: &str| obj.get(name).ok_or_else(|| Error::Parse(format!("instance lacks {name:?}")));
        let family = parse_circuit(field("family")?)?;
        let sampler = match field("sampler")? {
            s if s.get("gates").is_some() => Sampler::Circuit(parse_circuit(s)?),
            s if s.get("probs").is_some() => Sampler::Explicit(
                serde_json::from_value(s.clone()).map_err(|e| Error::Parse(format!("sampler: {e}")))?,
            ),
            _ => return Err(Error::Parse("sampler must be a circuit or a distribution".into())),
        };
        let params: LearnParams =
            serde_json::from_value(field("params")?.clone()).map_err(|e| Error::Parse(format!("params: {e}")))?;
        let mut inst = LearningInstance::new(sampler, family, params)?;
        if let Some(t) = obj.get("target") {
            let target = if let Some(m) = t.get("mixture") {
                let spec: MixtureSpec =
                    serde_json::from_value(m.clone()).map_err(|e| Error::Parse(format!("target mixture: {e}")))?;
                spec.resolve(&inst.family)?
            } else {
                serde_json::from_value(t.clone()).map_err(|e| Error::Parse(format!("target: {e}")))?
            };
            inst = inst.with_target(target)?;
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let sampler = match &self.sampler {
            Sampler::Explicit(d) => serde_json::to_value(d).unwrap(),
            Sampler::Circuit(c) => serde_json::to_value(c.circuit().desc()).unwrap(),
        };
        let mut v = serde_json::json!({
            "sampler": sampler,
            "family": self.family.circuit().desc(),
            "params": self.params,
        });
        if let Some(t) = &self.target {
            v["target"] = serde_json::to_value(t).unwrap();
        }
        serde_json::to_string_pretty(&v).unwrap()
    }
}

fn parse_circuit(v: &Value) -> Result<CircuitFamily> {
    CircuitFamily::from_json(&v.to_string())
}

/// `(1 - w) * D(member) + w * uniform`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub member: BitString,
    pub uniform_weight: String,
}

impl MixtureSpec {
    pub fn resolve(&self, fam: &CircuitFamily) -> Result<Distribution> {
        let w: BigRational = self
            .uniform_weight
            .parse()
            .map_err(|e| Error::Parse(format!("uniform_weight {:?}: {e}", self.uniform_weight)))?;
        dist_vector(fam, self.member)?.mix(&Distribution::uniform(fam.out_bits())?, &w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;

    const INSTANCE: &str = r#"{
        "sampler": {"width": 1, "probs": {"0": "1/2", "1": "1/2"}},
        "family": {"param_bits":1,"rand_bits":0,"out_bits":1,"gates":[],"outputs":[0]},
        "params": {"eps": 2, "delta": 10, "t": 8},
        "target": {"mixture": {"member": "1", "uniform_weight": "1/5"}}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let inst = LearningInstance::from_json(INSTANCE).unwrap();
        assert_eq!(inst.params, LearnParams { eps: 2, delta: 10, t: 8 });
        let target = inst.target.clone().unwrap();
        assert_eq!(target.prob("1".parse().unwrap()), rat(9, 10));
        let again = LearningInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again.target, inst.target);
        assert_eq!(again.family.circuit(), inst.family.circuit());
    }

    #[test]
    fn rejects_inconsistent_instances() {
        let bad_width = INSTANCE.replace(r#""width": 1, "probs": {"0": "1/2", "1": "1/2"}"#, r#""width": 2, "probs": {"00": "1"}"#);
        assert!(LearningInstance::from_json(&bad_width).is_err());
        let bad_params = INSTANCE.replace(r#""eps": 2"#, r#""eps": 0"#);
        assert!(LearningInstance::from_json(&bad_params).is_err());
        assert!(LearningInstance::from_json("[]").is_err());
    }

    #[test]
    fn circuit_sampler() {
        let text = INSTANCE.replace(
            r#"{"width": 1, "probs": {"0": "1/2", "1": "1/2"}}"#,
            r#"{"param_bits":0,"rand_bits":1,"out_bits":1,"gates":[],"outputs":[0]}"#,
        );
        let inst = LearningInstance::from_json(&text).unwrap();
        assert_eq!(inst.sampler.distribution().unwrap(), Distribution::uniform(1).unwrap());
    }
}
