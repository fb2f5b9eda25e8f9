//! Whole-space checks shared by the property suites and the acceptance run.

use std::collections::BTreeSet;

use branchbook_core::insight::Payload;
use branchbook_core::recommend::{self, QuestionKind};
use branchbook_core::session::{Cell, CellContent, CellKind, Event, Session};
use branchbook_core::Engine;

use super::oracles;

/// Every insight's logically- and attribute-related answers equal the
/// brute-force scans, never contain the source, and combos are well formed.
pub fn rule_conformance(engine: &Engine) -> Result<(), String> {
    let space = engine.space();
    for source in space.insights() {
        let logical = recommend::logically_related(source, space);
        let got: BTreeSet<Vec<String>> = logical.iter().map(|a| a.insight_ids.clone()).collect();
        if got.len() != logical.len() {
            return Err(format!("{}: duplicate logical answers", source.id));
        }
        let want = oracles::logically_related(source, space);
        if got != want {
            return Err(format!("{}: logical answers {got:?} != oracle {want:?}", source.id));
        }
        for answer in &logical {
            if answer.insight_ids.contains(&source.id) {
                return Err(format!("{}: answers itself", source.id));
            }
            if let [first, second] = answer.insight_ids.as_slice() {
                let (a, b) = (space.get(first).unwrap(), space.get(second).unwrap());
                if let (Payload::Extremum(e), Payload::Correlation(c)) = (&a.payload, &b.payload) {
                    let shared = c.measures.iter().filter(|m| **m == e.measure).count();
                    if shared != 1 {
                        return Err(format!("{}: combo {first}+{second} shares {shared} measures", source.id));
                    }
                }
            }
        }
        let attr: BTreeSet<String> = recommend::attribute_related(source, space, &logical)
            .into_iter()
            .map(|a| a.insight_ids[0].clone())
            .collect();
        let want = oracles::attribute_related(source, space);
        if attr != want {
            return Err(format!("{}: attribute answers differ from oracle", source.id));
        }
    }
    Ok(())
}

/// Every panel equals the sorted brute-force panel, puts logical before
/// attribute questions, keeps attribute tiers non-decreasing and respects `k`.
pub fn panel_ordering(engine: &Engine, k: usize, explored_sets: &[BTreeSet<String>]) -> Result<(), String> {
    let space = engine.space();
    for source in space.insights() {
        for explored in explored_sets {
            let panel = recommend::recommend(source, explored, space, engine.phrases(), k);
            if panel.len() > k {
                return Err(format!("{}: {} questions > k={k}", source.id, panel.len()));
            }
            let first_attr = panel.iter().position(|q| q.kind == QuestionKind::AttributeRelated);
            if let Some(i) = first_attr {
                if panel[i..].iter().any(|q| q.kind == QuestionKind::LogicallyRelated) {
                    return Err(format!("{}: logical question after an attribute one", source.id));
                }
            }
            let tiers: Vec<u8> = panel
                .iter()
                .filter(|q| q.kind == QuestionKind::AttributeRelated)
                .map(|q| q.rank.tier)
                .collect();
            if tiers.windows(2).any(|w| w[0] > w[1]) {
                return Err(format!("{}: attribute tiers {tiers:?}", source.id));
            }
            let got: Vec<(String, QuestionKind, BTreeSet<Vec<String>>)> = panel
                .iter()
                .map(|q| (q.id.clone(), q.kind, q.answers.iter().map(|a| a.insight_ids.clone()).collect()))
                .collect();
            let want = oracles::panel(source, explored, space, k);
            if got != want {
                return Err(format!("{}: panel {got:?} != oracle {want:?}", source.id));
            }
            let again = recommend::recommend(source, explored, space, engine.phrases(), k);
            if again != panel {
                return Err(format!("{}: recommend is not repeatable", source.id));
            }
        }
    }
    Ok(())
}

/// Explored sets to test suppression with: nothing, and everything that a
/// sibling insight's answers would have shown.
pub fn explored_samples(engine: &Engine, seed: u64) -> Vec<BTreeSet<String>> {
    let ids: Vec<&String> = engine.space().insights().iter().map(|i| &i.id).collect();
    let picked: BTreeSet<String> = ids
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as u64 ^ seed).is_multiple_of(3))
        .map(|(_, id)| (*id).clone())
        .collect();
    vec![BTreeSet::new(), picked]
}

/// Structural invariants of a session: one root, parents created earlier
/// (so no cycles), node count equal to creation events, archived count equal
/// to deletes minus restores, notebook equal to the unarchived cells by id.
pub fn session_invariants(s: &Session) -> Result<(), String> {
    let tree = s.tree();
    let creates = s.events().iter().filter(|e| e.creates_cell()).count();
    if tree.nodes.len() != creates || s.cells().len() != creates {
        return Err(format!("{} nodes for {creates} creation events", tree.nodes.len()));
    }
    let roots: Vec<_> = tree.nodes.iter().filter(|n| n.parent_id.is_none()).collect();
    if roots.len() != 1 || roots[0].id != 1 {
        return Err(format!("roots {:?}", roots.iter().map(|n| n.id).collect::<Vec<_>>()));
    }
    for (i, cell) in s.cells().iter().enumerate() {
        if cell.id != i as u64 + 1 {
            return Err(format!("cell at {i} has id {}", cell.id));
        }
        if let Some(p) = cell.parent_id {
            if p >= cell.id {
                return Err(format!("cell {} has parent {p}", cell.id));
            }
        }
        if let CellContent::Visualization { charts } = &cell.content {
            if charts.is_empty() {
                return Err(format!("cell {} has no charts", cell.id));
            }
        }
        // walking up always reaches the root
        let path = s.path_to_root(cell.id).map_err(|e| e.to_string())?;
        if path.last().map(|c| c.id) != Some(1) || path.len() > s.cells().len() {
            return Err(format!("cell {} does not reach the root", cell.id));
        }
    }
    if tree.edges.len() != creates - 1 {
        return Err("edge count".into());
    }
    let deletes = s.events().iter().filter(|e| matches!(e, Event::Delete { .. })).count();
    let restores = s.events().iter().filter(|e| matches!(e, Event::Restore { .. })).count();
    let archived = s.cells().iter().filter(|c| c.archived).count();
    if archived != deletes - restores {
        return Err(format!("{archived} archived, {deletes} deletes, {restores} restores"));
    }
    let notebook: Vec<u64> = s.notebook().map(|c| c.id).collect();
    let mut expected: Vec<u64> = s.cells().iter().filter(|c| !c.archived).map(|c| c.id).collect();
    expected.sort();
    if notebook != expected {
        return Err("notebook order".into());
    }
    Ok(())
}

/// Drives `s` with `steps`, each `(op, a, b)` choosing an operation and
/// its targets among currently valid ones; checks invariants after every
/// event and the delete/restore properties as they happen.
pub fn fuzz_session(engine: &Engine, s: &mut Session, steps: &[(u8, u16, u16)]) -> Result<(), String> {
    session_invariants(s)?;
    for &(op, a, b) in steps {
        let visible: Vec<&Cell> = s.notebook().collect();
        let pick = |cells: &[&Cell]| (!cells.is_empty()).then(|| cells[a as usize % cells.len()].id);
        match op % 6 {
            0 | 1 => {
                let vis: Vec<&Cell> = visible.iter().copied().filter(|c| c.kind() == CellKind::Visualization).collect();
                let Some(cell) = pick(&vis) else { continue };
                let panel = s.recommendations(engine, cell).map_err(|e| e.to_string())?;
                if panel.is_empty() {
                    continue;
                }
                let q = &panel[b as usize % panel.len()];
                let id = s.select_question(engine, cell, &q.id).map_err(|e| e.to_string())?;
                let new = s.cell(id).unwrap();
                let expect_list = q.aggregated && q.answers.len() >= 2;
                if (new.kind() == CellKind::ActionList) != expect_list || new.parent_id != Some(cell) {
                    return Err(format!("question {} made the wrong cell", q.id));
                }
            }
            2 => {
                let lists: Vec<&Cell> = visible.iter().copied().filter(|c| c.kind() == CellKind::ActionList).collect();
                let Some(cell) = pick(&lists) else { continue };
                let CellContent::ActionList { answers, .. } = &s.cell(cell).unwrap().content else { unreachable!() };
                let index = b as usize % answers.len();
                let n = answers[index].insight_ids.len();
                let id = s.select_action(engine, cell, index).map_err(|e| e.to_string())?;
                if s.cell(id).unwrap().insight_ids().count() != n {
                    return Err("action chart count".into());
                }
            }
            3 | 4 => {
                let deletable: Vec<&Cell> = visible.iter().copied().filter(|c| c.parent_id.is_some()).collect();
                let Some(cell) = pick(&deletable) else { continue };
                let before_edges = s.tree().edges;
                let before_notebook: Vec<u64> = s.notebook().map(|c| c.id).collect();
                let children: Vec<(u64, bool)> = s
                    .cells()
                    .iter()
                    .filter(|c| c.parent_id == Some(cell))
                    .map(|c| (c.id, c.archived))
                    .collect();
                s.delete_cell(engine, cell).map_err(|e| e.to_string())?;
                session_invariants(s)?;
                let after: Vec<(u64, bool)> = s
                    .cells()
                    .iter()
                    .filter(|c| c.parent_id == Some(cell))
                    .map(|c| (c.id, c.archived))
                    .collect();
                if s.tree().edges != before_edges || after != children {
                    return Err(format!("deleting {cell} disturbed its children"));
                }
                if s.notebook().count() + 1 != before_notebook.len() {
                    return Err("notebook did not shrink by one".into());
                }
                if op % 6 == 4 {
                    s.restore_cell(engine, cell).map_err(|e| e.to_string())?;
                    let restored: Vec<u64> = s.notebook().map(|c| c.id).collect();
                    if restored != before_notebook || s.tree().edges != before_edges {
                        return Err(format!("restoring {cell} changed the notebook"));
                    }
                }
            }
            _ => {
                let archived: Vec<&Cell> = s.cells().iter().filter(|c| c.archived).collect();
                let Some(cell) = pick(&archived) else { continue };
                let edges = s.tree().edges;
                s.restore_cell(engine, cell).map_err(|e| e.to_string())?;
                if s.tree().edges != edges {
                    return Err("restore changed edges".into());
                }
            }
        }
        session_invariants(s)?;
    }

    let replayed = Session::replay(engine, s.events()).map_err(|e| e.to_string())?;
    if replayed != *s {
        return Err("replay differs".into());
    }
    let json = s.export_json();
    let imported = Session::import_json(engine, &json).map_err(|e| e.to_string())?;
    if imported != *s || imported.export_json() != json {
        return Err("export/import is not byte-exact".into());
    }
    Ok(())
}
