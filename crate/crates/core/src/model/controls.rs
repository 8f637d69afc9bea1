use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a control point. Coefficient evaluators own everything the
/// control means; the rest of the crate only passes the index around.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ControlId(pub usize);

impl fmt::Display for ControlId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Finite nested control samples `A(1) ⊂ A(2) ⊂ …`.
#[derive(Clone, Debug)]
pub struct ControlSpace {
    labels: Vec<String>,
    levels: Vec<Vec<ControlId>>,
}

impl ControlSpace {
    pub fn new(labels: Vec<String>, levels: Vec<Vec<usize>>) -> Result<Self> {
        if levels.is_empty() || levels[0].is_empty() {
            return Err(Error::Input(
                "level 1 must contain at least one control".into(),
            ));
        }
        let mut out = Vec::with_capacity(levels.len());
        for (n, level) in levels.iter().enumerate() {
            let mut ids: Vec<ControlId> = level.iter().map(|&i| ControlId(i)).collect();
            ids.sort();
            ids.dedup();
            if let Some(bad) = ids.iter().find(|c| c.0 >= labels.len()) {
                return Err(Error::Input(format!(
                    "control {bad} at level {} has no label",
                    n + 1
                )));
            }
            if let Some(prev) = out.last() {
                let prev: &Vec<ControlId> = prev;
                if let Some(missing) = prev.iter().find(|c| ids.binary_search(c).is_err()) {
                    return Err(Error::Input(format!(
                        "control {missing} present at level {} but missing at level {}",
                        n,
                        n + 1
                    )));
                }
            }
            out.push(ids);
        }
        Ok(Self {
            labels,
            levels: out,
        })
    }

    /// One level holding every labelled control.
    pub fn flat<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let all = (0..labels.len()).map(ControlId).collect();
        Self {
            labels,
            levels: vec![all],
        }
    }

    /// Levels given by prefix sizes of the label list.
    pub fn prefixes<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        sizes: &[usize],
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let levels = sizes.iter().map(|&s| (0..s).collect()).collect();
        Self::new(labels, levels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: ControlId) -> &str {
        &self.labels[id.0]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Controls at level `n`, counted from 1.
    pub fn level(&self, n: usize) -> Result<&[ControlId]> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::Config(format!(
                "control level {n} out of range 1..={}",
                self.levels.len()
            )));
        }
        Ok(&self.levels[n - 1])
    }

    pub fn top(&self) -> &[ControlId] {
        self.levels.last().expect("nonempty by construction")
    }

    pub fn contains(&self, id: ControlId) -> bool {
        id.0 < self.labels.len()
    }

    /// Product with `count` auxiliary samples: base control `a` and sample `j`
    /// map to index `a * count + j`; level `n` is level `n` of the base times
    /// all samples.
    pub fn product(&self, count: usize, sample_label: impl Fn(usize) -> String) -> Self {
        let mut labels = Vec::with_capacity(self.len() * count);
        for base in &self.labels {
            for j in 0..count {
                labels.push(format!("{base}{}", sample_label(j)));
            }
        }
        let levels = self
            .levels
            .iter()
            .map(|lvl| {
                lvl.iter()
                    .flat_map(|a| (0..count).map(move |j| ControlId(a.0 * count + j)))
                    .collect()
            })
            .collect();
        Self { labels, levels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_first_level() {
        assert!(ControlSpace::new(vec!["a".into()], vec![vec![]]).is_err());
    }

    #[test]
    fn rejects_broken_nesting() {
        let labels = vec!["a".into(), "b".into(), "c".into()];
        let err = ControlSpace::new(labels, vec![vec![0, 1], vec![0, 2]]);
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn product_preserves_nesting() {
        let base = ControlSpace::prefixes(["a", "b", "c"], &[1, 3]).unwrap();
        let p = base.product(4, |j| format!("/{j}"));
        assert_eq!(p.len(), 12);
        let l1 = p.level(1).unwrap();
        let l2 = p.level(2).unwrap();
        assert_eq!(l1.len(), 4);
        assert!(l1.iter().all(|c| l2.contains(c)));
        assert_eq!(p.label(ControlId(5)), "b/1");
    }
}
