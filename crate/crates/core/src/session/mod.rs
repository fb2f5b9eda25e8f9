//! Notebook sessions.
//!
//! A session is a fold over its event log. Every mutation is expressed as an
//! [`Event`] and applied through one code path, so replaying the log from
//! empty rebuilds the identical state. Cells are never removed: deleting a
//! cell archives it, its children stay attached, and restoring it brings it
//! back at its id-ordered position in the notebook.

mod persist;
mod tree;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chart::{charts_for_answer, ChartError, ChartSpec};
use crate::engine::Engine;
use crate::insight::{Insight, InsightSpace, InsightType, Polarity};
use crate::recommend::{self, Answer, Question};

pub use persist::{parse_event_lines, EventRecord, SessionDocument, SessionMeta, SESSION_FORMAT_VERSION};
pub use tree::{TreeEdge, TreeNode, TreeSnapshot};

pub type CellId = u64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("no insight matches the root selector")]
    NoMatchingInsight,
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("cell {0} is archived")]
    ArchivedCell(CellId),
    #[error("question '{0}' is not offered by this cell")]
    UnknownQuestion(String),
    #[error("cell {0} is not a visualization cell")]
    NotAVisualizationCell(CellId),
    #[error("cell {0} is not an action list")]
    NotAnActionList(CellId),
    #[error("action index {index} out of range (cell has {len} actions)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cell {0} is already archived")]
    AlreadyArchived(CellId),
    #[error("the root cell cannot be deleted")]
    CannotDeleteRoot,
    #[error("cell {0} is not archived")]
    NotArchived(CellId),
    #[error("corrupt event log at event {seq}: {reason}")]
    CorruptLog { seq: usize, reason: String },
    #[error("version mismatch: {0}")]
    VersionMismatch(String),
    #[error("malformed session document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

/// Which insight the root cell shows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RootSelector {
    Id(String),
    Query(InsightQuery),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InsightQuery {
    #[serde(rename = "type")]
    pub insight_type: InsightType,
    pub attributes: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
}

impl RootSelector {
    /// Parses `id` or `type:attr,attr[:polarity]` (e.g. `extremum:Year,Horsepower:lowest`).
    pub fn parse(text: &str) -> Option<Self> {
        if text.contains('|') {
            return Some(Self::Id(text.to_string()));
        }
        let mut parts = text.splitn(3, ':');
        let insight_type = InsightType::parse(parts.next()?)?;
        let attributes: BTreeSet<String> = parts
            .next()
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        let polarity = match parts.next() {
            Some(p) => Some(Polarity::parse(p)?),
            None => None,
        };
        Some(Self::Query(InsightQuery { insight_type, attributes, polarity }))
    }

    pub fn resolve<'a>(selector: Option<&Self>, space: &'a InsightSpace) -> Result<&'a Insight, SessionError> {
        let best = |it: &mut dyn Iterator<Item = &'a Insight>| it.min_by(|a, b| a.rank_cmp(b));
        let found = match selector {
            None => best(&mut space.insights().iter()),
            Some(Self::Id(id)) => space.get(id),
            Some(Self::Query(q)) => best(&mut space.of_type(q.insight_type).filter(|i| {
                i.attributes == q.attributes
                    && q.polarity.is_none_or(|p| i.extremum().map(|e| e.polarity) == Some(p))
            })),
        };
        found.ok_or(SessionError::NoMatchingInsight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Visualization,
    ActionList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellChart {
    pub insight_id: String,
    pub text: String,
    pub chart: ChartSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum CellContent {
    Visualization {
        charts: Vec<CellChart>,
    },
    ActionList {
        question_id: String,
        question_text: String,
        answers: Vec<Answer>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Cell {
    pub id: CellId,
    pub parent_id: Option<CellId>,
    pub spawned_by_question_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawned_by_action: Option<usize>,
    pub content: CellContent,
    pub archived: bool,
    pub created_at_event: usize,
}

impl Cell {
    pub fn kind(&self) -> CellKind {
        match self.content {
            CellContent::Visualization { .. } => CellKind::Visualization,
            CellContent::ActionList { .. } => CellKind::ActionList,
        }
    }

    /// Insight ids shown as charts.
    pub fn insight_ids(&self) -> impl Iterator<Item = &str> {
        let charts: &[CellChart] = match &self.content {
            CellContent::Visualization { charts } => charts,
            CellContent::ActionList { .. } => &[],
        };
        charts.iter().map(|c| c.insight_id.as_str())
    }

    pub fn primary_insight_id(&self) -> Option<&str> {
        self.insight_ids().next()
    }

    pub fn summary(&self) -> String {
        match &self.content {
            CellContent::Visualization { charts } => {
                charts.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join("; ")
            }
            CellContent::ActionList { question_text, .. } => question_text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum Event {
    CreateRoot {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        selector: Option<RootSelector>,
    },
    SelectQuestion {
        cell_id: CellId,
        question_id: String,
    },
    SelectAction {
        cell_id: CellId,
        action_index: usize,
    },
    Delete {
        cell_id: CellId,
    },
    Restore {
        cell_id: CellId,
    },
}

impl Event {
    pub fn creates_cell(&self) -> bool {
        matches!(self, Event::CreateRoot { .. } | Event::SelectQuestion { .. } | Event::SelectAction { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    table_ref: String,
    space_ref: String,
    cells: Vec<Cell>,
    event_log: Vec<Event>,
}

impl Session {
    fn empty(engine: &Engine) -> Self {
        Self {
            table_ref: engine.table().name.clone(),
            space_ref: engine.fingerprint().to_string(),
            cells: Vec::new(),
            event_log: Vec::new(),
        }
    }

    /// Starts a session whose root cell shows the selected insight.
    pub fn create(engine: &Engine, selector: Option<RootSelector>) -> Result<Self, SessionError> {
        let mut session = Self::empty(engine);
        session.apply(engine, Event::CreateRoot { selector })?;
        Ok(session)
    }

    /// Rebuilds a session by applying `events` in order.
    pub fn replay(engine: &Engine, events: &[Event]) -> Result<Self, SessionError> {
        let Some(Event::CreateRoot { .. }) = events.first() else {
            return Err(SessionError::CorruptLog { seq: 0, reason: "log does not start with create_root".into() });
        };
        let mut session = Self::empty(engine);
        for (seq, event) in events.iter().enumerate() {
            session.apply(engine, event.clone()).map_err(|e| SessionError::CorruptLog {
                seq,
                reason: e.to_string(),
            })?;
        }
        Ok(session)
    }

    pub fn table_ref(&self) -> &str {
        &self.table_ref
    }

    pub fn space_ref(&self) -> &str {
        &self.space_ref
    }

    pub fn events(&self) -> &[Event] {
        &self.event_log
    }

    /// Every cell ever created, including archived ones, by id.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> Result<&Cell, SessionError> {
        id.checked_sub(1)
            .and_then(|i| self.cells.get(i as usize))
            .ok_or(SessionError::UnknownCell(id))
    }

    fn cell_mut(&mut self, id: CellId) -> Result<&mut Cell, SessionError> {
        id.checked_sub(1)
            .and_then(|i| self.cells.get_mut(i as usize))
            .ok_or(SessionError::UnknownCell(id))
    }

    /// The linear notebook: visible cells in id order.
    pub fn notebook(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| !c.archived)
    }

    /// `id` and its ancestors up to the root.
    pub fn path_to_root(&self, id: CellId) -> Result<Vec<&Cell>, SessionError> {
        let mut path = vec![self.cell(id)?];
        while let Some(parent) = path.last().and_then(|c| c.parent_id) {
            path.push(self.cell(parent)?);
        }
        Ok(path)
    }

    /// The question panel of a visualization cell.
    pub fn recommendations(&self, engine: &Engine, id: CellId) -> Result<Vec<Question>, SessionError> {
        let cell = self.cell(id)?;
        let source_id = cell.primary_insight_id().ok_or(SessionError::NotAVisualizationCell(id))?;
        let source = engine
            .space()
            .get(source_id)
            .ok_or_else(|| SessionError::Malformed(format!("cell {id} shows unknown insight '{source_id}'")))?;
        let explored: BTreeSet<String> = self
            .path_to_root(id)?
            .into_iter()
            .flat_map(|c| c.insight_ids().map(String::from).collect::<Vec<_>>())
            .collect();
        Ok(recommend::recommend(
            source,
            &explored,
            engine.space(),
            engine.phrases(),
            engine.config().recommender.k,
        ))
    }

    pub fn select_question(&mut self, engine: &Engine, cell_id: CellId, question_id: &str) -> Result<CellId, SessionError> {
        self.apply(engine, Event::SelectQuestion { cell_id, question_id: question_id.to_string() })?;
        Ok(self.cells.len() as CellId)
    }

    pub fn select_action(&mut self, engine: &Engine, cell_id: CellId, action_index: usize) -> Result<CellId, SessionError> {
        self.apply(engine, Event::SelectAction { cell_id, action_index })?;
        Ok(self.cells.len() as CellId)
    }

    pub fn delete_cell(&mut self, engine: &Engine, cell_id: CellId) -> Result<(), SessionError> {
        self.apply(engine, Event::Delete { cell_id })
    }

    pub fn restore_cell(&mut self, engine: &Engine, cell_id: CellId) -> Result<(), SessionError> {
        self.apply(engine, Event::Restore { cell_id })
    }

    fn visualization(engine: &Engine, ids: &[String]) -> Result<CellContent, SessionError> {
        let insights: Vec<&Insight> = ids
            .iter()
            .map(|id| {
                engine
                    .space()
                    .get(id)
                    .ok_or_else(|| SessionError::Malformed(format!("answer names unknown insight '{id}'")))
            })
            .collect::<Result<_, _>>()?;
        let charts = charts_for_answer(&insights)?
            .into_iter()
            .map(|(insight_id, chart)| CellChart {
                text: engine.space().get(&insight_id).map(|i| i.text.clone()).unwrap_or_default(),
                insight_id,
                chart,
            })
            .collect();
        Ok(CellContent::Visualization { charts })
    }

    fn visible(&self, id: CellId) -> Result<&Cell, SessionError> {
        let cell = self.cell(id)?;
        if cell.archived {
            return Err(SessionError::ArchivedCell(id));
        }
        Ok(cell)
    }

    fn push_cell(
        &mut self,
        parent_id: Option<CellId>,
        spawned_by_question_id: Option<String>,
        spawned_by_action: Option<usize>,
        content: CellContent,
    ) {
        let id = self.cells.len() as CellId + 1;
        self.cells.push(Cell {
            id,
            parent_id,
            spawned_by_question_id,
            spawned_by_action,
            content,
            archived: false,
            created_at_event: self.event_log.len(),
        });
    }

    /// Validates and applies one event; the log only grows on success.
    pub fn apply(&mut self, engine: &Engine, event: Event) -> Result<(), SessionError> {
        match &event {
            Event::CreateRoot { selector } => {
                if !self.cells.is_empty() {
                    return Err(SessionError::CorruptLog {
                        seq: self.event_log.len(),
                        reason: "second create_root".into(),
                    });
                }
                let root = RootSelector::resolve(selector.as_ref(), engine.space())?;
                let content = Self::visualization(engine, std::slice::from_ref(&root.id))?;
                self.push_cell(None, None, None, content);
            }
            Event::SelectQuestion { cell_id, question_id } => {
                let cell = self.visible(*cell_id)?;
                if cell.kind() != CellKind::Visualization {
                    return Err(SessionError::NotAVisualizationCell(*cell_id));
                }
                let question = self
                    .recommendations(engine, *cell_id)?
                    .into_iter()
                    .find(|q| q.id == *question_id)
                    .ok_or_else(|| SessionError::UnknownQuestion(question_id.clone()))?;
                let content = if question.aggregated && question.answers.len() >= 2 {
                    CellContent::ActionList {
                        question_id: question.id.clone(),
                        question_text: question.text.clone(),
                        answers: question.answers,
                    }
                } else {
                    Self::visualization(engine, &question.answers[0].insight_ids)?
                };
                self.push_cell(Some(*cell_id), Some(question_id.clone()), None, content);
            }
            Event::SelectAction { cell_id, action_index } => {
                let cell = self.visible(*cell_id)?;
                let CellContent::ActionList { question_id, answers, .. } = &cell.content else {
                    return Err(SessionError::NotAnActionList(*cell_id));
                };
                let answer = answers.get(*action_index).ok_or(SessionError::IndexOutOfRange {
                    index: *action_index,
                    len: answers.len(),
                })?;
                let question_id = question_id.clone();
                let content = Self::visualization(engine, &answer.insight_ids)?;
                self.push_cell(Some(*cell_id), Some(question_id), Some(*action_index), content);
            }
            Event::Delete { cell_id } => {
                let cell = self.cell_mut(*cell_id)?;
                if cell.parent_id.is_none() {
                    return Err(SessionError::CannotDeleteRoot);
                }
                if cell.archived {
                    return Err(SessionError::AlreadyArchived(*cell_id));
                }
                cell.archived = true;
            }
            Event::Restore { cell_id } => {
                let cell = self.cell_mut(*cell_id)?;
                if !cell.archived {
                    return Err(SessionError::NotArchived(*cell_id));
                }
                cell.archived = false;
            }
        }
        self.event_log.push(event);
        Ok(())
    }
}
