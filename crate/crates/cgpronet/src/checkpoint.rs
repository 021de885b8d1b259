//! Flat JSON checkpoint schema for trained models, lossless at full double
//! precision (serde_json emits the shortest round-tripping decimal).

use anyhow::{bail, Result};
use cgpronet_core::filter::{HeatCoeffs, PolyCoeffs};
use cgpronet_core::model::{
    Activation, CgpParams, HeatParams, MultiHorizonParams, MultiHorizonVariant,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    /// One of `base`, `mlp_head`, `adaptive`, `shared`, `heat`.
    pub variant: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "H")]
    pub h: usize,
    /// `tanh` or `identity`.
    pub activation: String,
    pub alphas: Vec<f64>,
    /// Ragged filter coefficients per lag. For `heat`, each row is
    /// `[scale, time]`.
    pub thetas: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_horizon_thetas: Option<Vec<Vec<Vec<f64>>>>,
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Tanh => "tanh",
        Activation::Identity => "identity",
    }
}

pub fn parse_activation(name: &str) -> Result<Activation> {
    match name {
        "tanh" => Ok(Activation::Tanh),
        "identity" => Ok(Activation::Identity),
        other => bail!("unknown activation {other:?} (expected tanh or identity)"),
    }
}

fn theta_rows(thetas: &[PolyCoeffs]) -> Vec<Vec<f64>> {
    thetas.iter().map(|t| t.coeffs().to_vec()).collect()
}

fn rows_to_thetas(rows: &[Vec<f64>]) -> Result<Vec<PolyCoeffs>> {
    rows.iter()
        .map(|r| Ok(PolyCoeffs::new(r.clone())?))
        .collect()
}

/// A trained model in checkpointable form.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Base(CgpParams),
    Multi(MultiHorizonParams),
    Heat(HeatParams),
}

impl Model {
    pub fn n_params(&self) -> usize {
        match self {
            Model::Base(p) => p.n_params(),
            Model::Multi(p) => p.n_params(),
            Model::Heat(p) => p.n_params(),
        }
    }

    pub fn ar_order(&self) -> usize {
        match self {
            Model::Base(p) => p.ar_order(),
            Model::Multi(p) => p.ar_order(),
            Model::Heat(p) => p.ar_order(),
        }
    }
}

pub fn to_checkpoint(model: &Model) -> Checkpoint {
    match model {
        Model::Base(p) => Checkpoint {
            variant: "base".into(),
            m: p.ar_order(),
            h: 1,
            activation: activation_name(p.activation).into(),
            alphas: p.alphas.clone(),
            thetas: theta_rows(&p.thetas),
            head: None,
            per_horizon_thetas: None,
        },
        Model::Multi(p) => Checkpoint {
            variant: match p.variant {
                MultiHorizonVariant::MlpHead => "mlp_head",
                MultiHorizonVariant::Adaptive => "adaptive",
                MultiHorizonVariant::Shared => "shared",
            }
            .into(),
            m: p.ar_order(),
            h: p.horizons,
            activation: activation_name(p.base.activation).into(),
            alphas: p.base.alphas.clone(),
            thetas: theta_rows(&p.base.thetas),
            head: p.head.clone(),
            per_horizon_thetas: p
                .per_horizon
                .as_ref()
                .map(|sets| sets.iter().map(|s| theta_rows(s)).collect()),
        },
        Model::Heat(p) => Checkpoint {
            variant: "heat".into(),
            m: p.ar_order(),
            h: 1,
            activation: activation_name(p.activation).into(),
            alphas: p.alphas.clone(),
            thetas: p.coeffs.iter().map(|c| vec![c.scale, c.time]).collect(),
            head: None,
            per_horizon_thetas: None,
        },
    }
}

pub fn from_checkpoint(ck: &Checkpoint) -> Result<Model> {
    let activation = parse_activation(&ck.activation)?;
    match ck.variant.as_str() {
        "base" => Ok(Model::Base(CgpParams::new(
            ck.alphas.clone(),
            rows_to_thetas(&ck.thetas)?,
            activation,
        )?)),
        "mlp_head" | "adaptive" | "shared" => {
            let variant = match ck.variant.as_str() {
                "mlp_head" => MultiHorizonVariant::MlpHead,
                "adaptive" => MultiHorizonVariant::Adaptive,
                _ => MultiHorizonVariant::Shared,
            };
            let base =
                CgpParams::new(ck.alphas.clone(), rows_to_thetas(&ck.thetas)?, activation)?;
            let per_horizon = match &ck.per_horizon_thetas {
                Some(sets) => Some(
                    sets.iter()
                        .map(|s| rows_to_thetas(s))
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            Ok(Model::Multi(MultiHorizonParams::new(
                variant,
                base,
                ck.h,
                ck.head.clone(),
                per_horizon,
            )?))
        }
        "heat" => {
            let coeffs = ck
                .thetas
                .iter()
                .map(|row| {
                    if row.len() != 2 {
                        bail!("heat checkpoint rows must be [scale, time]");
                    }
                    Ok(HeatCoeffs::new(row[0], row[1])?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Model::Heat(HeatParams::new(ck.alphas.clone(), coeffs, activation)?))
        }
        other => bail!("unknown checkpoint variant {other:?}"),
    }
}
