use std::collections::BTreeSet;

use super::{check_input, CfgError, Derivation, Step};
use crate::grammar::{CatId, Grammar};

pub const ORACLE_MAX_LEN: usize = 12;

#[derive(Clone, Debug, Default)]
pub struct OracleResult {
    pub derivations: BTreeSet<Derivation>,
    pub windows_tried: u64,
}

/// Blind enumeration of every reduction sequence reaching the start symbol:
/// each window is compared with each rule, no index and no pruning.
pub fn oracle_parse(input: &[CatId], g: &Grammar) -> Result<OracleResult, CfgError> {
    check_input(input, g)?;
    if input.len() > ORACLE_MAX_LEN {
        return Err(CfgError::TooLong(input.len()));
    }
    let mut res = OracleResult::default();
    if let Some(start) = g.start() {
        let mut path = vec![input.to_vec()];
        walk(g, start, &mut path, &mut Vec::new(), &mut res);
    }
    Ok(res)
}

fn walk(g: &Grammar, start: CatId, path: &mut Vec<Vec<CatId>>, steps: &mut Vec<Step>, res: &mut OracleResult) {
    let cur = path.last().unwrap().clone();
    if cur == [start] {
        res.derivations.insert(Derivation { steps: steps.clone() });
        return;
    }
    for a in 0..cur.len() {
        for b in 1..=cur.len() - a {
            res.windows_tried += 1;
            for rule in &g.rules {
                if rule.rhs[..] != cur[a..a + b] {
                    continue;
                }
                let mut next = cur[..a].to_vec();
                next.push(rule.lhs);
                next.extend_from_slice(&cur[a + b..]);
                // a unary chain may not come back to a sequence it already produced
                if b == 1 && path.contains(&next) {
                    continue;
                }
                steps.push(Step {
                    pos: a,
                    lhs: rule.lhs,
                    rhs: rule.rhs.clone(),
                });
                path.push(next);
                walk(g, start, path, steps, res);
                path.pop();
                steps.pop();
            }
        }
    }
}
