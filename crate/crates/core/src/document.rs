//! JSON loss-spec documents:
//!
//! ```json
//! {"weight": {"name": "cost", "params": {"c0": 0.3}}, "link": {"name": "logit"}}
//! {"weight": {"table": [[0.1, 2.0], [0.5, 1.0], [0.9, 2.0]]}}
//! {"weight": {"expr": "1/(c*(1-c))"}, "link": {"name": "canonical"}}
//! {"margin": {"name": "zhang", "params": {"alpha": 2}}}
//! ```
//!
//! The link defaults to `identity`. A margin document fixes its own link.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::composite::{catalog_margin, make_composite, margin_composite, CompositeLoss, MarginLoss};
use crate::error::{Error, Result};
use crate::links::resolve_link;
use crate::proper::{from_weight, ProperLoss};
use crate::scalar::{lit, Real};
use crate::weights::{catalog_weight, parse_weight_name, WeightFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Table {
        table: Vec<[f64; 2]>,
    },
    Expr {
        expr: String,
    },
    Named {
        name: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<MarginSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkSpec>,
}

impl LossSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: LossSpec = serde_json::from_str(text).map_err(|e| Error::Parse(format!("loss spec: {e}")))?;
        spec.check()?;
        Ok(spec)
    }

    /// A document for a named weight (`"log"`, `"cost(0.3)"`, ...) under `link`.
    pub fn named(weight: &str, link: Option<&str>) -> Self {
        LossSpec {
            weight: Some(WeightSpec::Named {
                name: weight.to_string(),
                params: BTreeMap::new(),
            }),
            margin: None,
            link: link.map(|l| LinkSpec { name: l.to_string() }),
        }
    }

    fn check(&self) -> Result<()> {
        match (&self.weight, &self.margin) {
            (Some(_), Some(_)) => Err(Error::Argument(
                "a loss spec takes either a weight or a margin, not both".into(),
            )),
            (None, None) => Err(Error::Argument("a loss spec needs a weight or a margin".into())),
            (None, Some(_)) if self.link.is_some() => Err(Error::Argument(
                "a margin loss determines its own link; drop the link field".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn link_name(&self) -> &str {
        match (&self.link, &self.margin) {
            (Some(l), _) => &l.name,
            (None, Some(m)) => &m.name,
            (None, None) => "identity",
        }
    }

    pub fn weight_function<T: Real>(&self) -> Result<WeightFunction<T>> {
        self.check()?;
        match &self.weight {
            Some(WeightSpec::Table { table }) => {
                WeightFunction::from_table(table.iter().map(|&[c, w]| (lit(c), lit(w))).collect())
            }
            Some(WeightSpec::Expr { expr }) => WeightFunction::from_expr(expr),
            Some(WeightSpec::Named { name, params }) if params.is_empty() => parse_weight_name(name),
            Some(WeightSpec::Named { name, params }) => catalog_weight(name, params),
            None => Ok(self.composite::<T>()?.base().weight().clone()),
        }
    }

    pub fn margin_loss<T: Real>(&self) -> Result<Option<MarginLoss<T>>> {
        let Some(m) = &self.margin else {
            return Ok(None);
        };
        let name = match (m.name.as_str(), m.params.get("alpha")) {
            ("zhang", Some(a)) => format!("zhang:{a}"),
            (n, _) => n.to_string(),
        };
        catalog_margin(&name).map(Some)
    }

    pub fn proper_loss<T: Real>(&self) -> Result<ProperLoss<T>> {
        if self.margin.is_some() {
            return Ok(self.composite::<T>()?.base().clone());
        }
        from_weight(&self.weight_function()?)
    }

    pub fn composite<T: Real>(&self) -> Result<CompositeLoss<T>> {
        self.check()?;
        if let Some(m) = self.margin_loss()? {
            return margin_composite(&m);
        }
        let wf = self.weight_function()?;
        let base = from_weight(&wf)?;
        let link = resolve_link(self.link_name(), Some(&wf))?;
        make_composite(&base, &link)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{Label, Loss};

    #[test]
    fn parses_documented_shapes() {
        let s = LossSpec::parse(r#"{"weight":{"name":"boosting"},"link":{"name":"identity"}}"#).unwrap();
        assert_eq!(s.link_name(), "identity");
        let cl = s.composite::<f64>().unwrap();
        assert!((cl.partial(Label::Neg, 0.5) - 2.0).abs() < 1e-12);

        let s = LossSpec::parse(r#"{"weight":{"name":"cost","params":{"c0":0.3}}}"#).unwrap();
        let p = s.proper_loss::<f64>().unwrap();
        assert_eq!(p.ell_neg(0.4), 0.3);

        let s = LossSpec::parse(r#"{"weight":{"table":[[0.1,1],[0.9,1]]}}"#).unwrap();
        assert_eq!(s.weight_function::<f64>().unwrap().w(0.5), 1.0);

        let s = LossSpec::parse(r#"{"weight":{"expr":"1/(c*(1-c))"},"link":{"name":"canonical"}}"#).unwrap();
        let cl = s.composite::<f64>().unwrap();
        // canonical link of the log weight is the logit
        assert!((cl.partial(Label::Pos, 0.0) - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn margin_documents() {
        let s = LossSpec::parse(r#"{"margin":{"name":"logistic"}}"#).unwrap();
        let cl = s.composite::<f64>().unwrap();
        assert!((cl.partial(Label::Pos, 0.0) - 2f64.ln()).abs() < 1e-12);
        let s = LossSpec::parse(r#"{"margin":{"name":"zhang","params":{"alpha":2}}}"#).unwrap();
        assert!(s.composite::<f64>().is_ok());
        assert!(LossSpec::parse(r#"{"margin":{"name":"logistic"},"link":{"name":"logit"}}"#).is_err());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(LossSpec::parse("{}").is_err());
        assert!(LossSpec::parse(r#"{"weight":{"name":"log"},"margin":{"name":"logistic"}}"#).is_err());
        assert!(LossSpec::parse(r#"{"wieght":{"name":"log"}}"#).is_err());
        let s = LossSpec::parse(r#"{"weight":{"name":"nope"}}"#).unwrap();
        assert!(s.weight_function::<f64>().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let s = LossSpec::named("cost(0.3)", Some("logit"));
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(LossSpec::parse(&text).unwrap(), s);
    }
}
