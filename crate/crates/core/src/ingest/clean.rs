use serde::{Deserialize, Serialize};

use super::parse::{RawRow, RawTable, TableRecord};
use super::{IngestError, InspectionResult, TransportMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CleaningPolicy {
    /// Any invariant violation rejects the row.
    Strict,
    /// Clamp defect rates into [0, 1] and map unknown inspection results to
    /// `Pending`; everything else still rejects.
    #[default]
    Repair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueAction {
    Rejected,
    Repaired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IssueKind {
    MissingId,
    Unparseable { value: String },
    OutOfRange { value: String, expected: String },
    UnknownCategory { value: String },
    Clamped { from: f64, to: f64 },
    MappedToPending { value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub row: usize,
    pub field: String,
    pub action: IssueAction,
    #[serde(flatten)]
    pub kind: IssueKind,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rows_repaired: usize,
    pub rows_rejected: usize,
    pub issues: Vec<Issue>,
}

impl CleaningReport {
    /// `rows_read = accepted + rejected` and `repaired <= accepted`.
    pub fn is_consistent(&self) -> bool {
        self.rows_read == self.rows_accepted + self.rows_rejected && self.rows_repaired <= self.rows_accepted
    }

    /// Data-row indices that were accepted only after a repair.
    pub fn repaired_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .issues
            .iter()
            .filter(|i| i.action == IssueAction::Repaired)
            .map(|i| i.row)
            .collect();
        rows.dedup();
        rows
    }
}

/// Per-row issue collector handed to [`TableRecord::from_row`].
///
/// Every accessor records what it found and returns `None` when the cell
/// forces a rejection, so a row reports all of its problems at once.
#[derive(Debug)]
pub struct RowIssues {
    row: usize,
    issues: Vec<Issue>,
}

impl RowIssues {
    fn new(row: usize) -> Self {
        RowIssues {
            row,
            issues: Vec::new(),
        }
    }

    fn push(&mut self, field: &str, action: IssueAction, kind: IssueKind) {
        self.issues.push(Issue {
            row: self.row,
            field: field.to_string(),
            action,
            kind,
        });
    }

    fn reject(&mut self, field: &str, kind: IssueKind) {
        self.push(field, IssueAction::Rejected, kind);
    }

    fn repaired(&self) -> bool {
        self.issues.iter().any(|i| i.action == IssueAction::Repaired)
    }

    pub(crate) fn id(&mut self, row: &RawRow, col: usize, field: &str) -> Option<String> {
        let v = row.cell(col);
        if v.is_empty() {
            self.reject(field, IssueKind::MissingId);
            None
        } else {
            Some(v.to_string())
        }
    }

    fn real(&mut self, row: &RawRow, col: usize, field: &str) -> Option<f64> {
        let v = row.cell(col);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.reject(field, IssueKind::Unparseable { value: v.to_string() });
                None
            }
        }
    }

    fn ranged(&mut self, row: &RawRow, col: usize, field: &str, ok: fn(f64) -> bool, expected: &str) -> Option<f64> {
        let x = self.real(row, col, field)?;
        if ok(x) {
            Some(x)
        } else {
            self.reject(
                field,
                IssueKind::OutOfRange {
                    value: row.cell(col).to_string(),
                    expected: expected.to_string(),
                },
            );
            None
        }
    }

    pub(crate) fn non_negative_real(&mut self, row: &RawRow, col: usize, field: &str) -> Option<f64> {
        self.ranged(row, col, field, |x| x >= 0.0, ">= 0")
    }

    pub(crate) fn positive_real(&mut self, row: &RawRow, col: usize, field: &str) -> Option<f64> {
        self.ranged(row, col, field, |x| x > 0.0, "> 0")
    }

    pub(crate) fn count(&mut self, row: &RawRow, col: usize, field: &str) -> Option<u64> {
        let v = row.cell(col);
        match v.parse::<u64>() {
            Ok(n) => Some(n),
            Err(_) => {
                if v.parse::<i64>().is_ok() {
                    self.reject(
                        field,
                        IssueKind::OutOfRange {
                            value: v.to_string(),
                            expected: ">= 0".into(),
                        },
                    );
                } else {
                    self.reject(field, IssueKind::Unparseable { value: v.to_string() });
                }
                None
            }
        }
    }

    pub(crate) fn fraction(&mut self, row: &RawRow, col: usize, field: &str, policy: CleaningPolicy) -> Option<f64> {
        let x = self.real(row, col, field)?;
        if (0.0..=1.0).contains(&x) {
            return Some(x);
        }
        match policy {
            CleaningPolicy::Repair => {
                let to = x.clamp(0.0, 1.0);
                self.push(field, IssueAction::Repaired, IssueKind::Clamped { from: x, to });
                Some(to)
            }
            CleaningPolicy::Strict => {
                self.reject(
                    field,
                    IssueKind::OutOfRange {
                        value: row.cell(col).to_string(),
                        expected: "[0, 1]".into(),
                    },
                );
                None
            }
        }
    }

    pub(crate) fn inspection(
        &mut self,
        row: &RawRow,
        col: usize,
        field: &str,
        policy: CleaningPolicy,
    ) -> Option<InspectionResult> {
        let v = row.cell(col);
        match (v.parse::<InspectionResult>(), policy) {
            (Ok(r), _) => Some(r),
            (Err(_), CleaningPolicy::Repair) => {
                self.push(
                    field,
                    IssueAction::Repaired,
                    IssueKind::MappedToPending { value: v.to_string() },
                );
                Some(InspectionResult::Pending)
            }
            (Err(_), CleaningPolicy::Strict) => {
                self.reject(field, IssueKind::UnknownCategory { value: v.to_string() });
                None
            }
        }
    }

    pub(crate) fn transport(&mut self, row: &RawRow, col: usize, field: &str) -> Option<TransportMode> {
        let v = row.cell(col);
        match v.parse::<TransportMode>() {
            Ok(m) => Some(m),
            Err(_) => {
                self.reject(field, IssueKind::UnknownCategory { value: v.to_string() });
                None
            }
        }
    }
}

/// Converts raw rows into validated records under `policy`.
///
/// Returns the accepted records in file order together with a report of
/// every rejection and repair. Fails with [`IngestError::EmptyDataset`] when
/// no row survives.
pub fn clean_records<T: TableRecord>(
    table: &RawTable,
    policy: CleaningPolicy,
) -> Result<(Vec<T>, CleaningReport), IngestError> {
    if table.kind != T::KIND {
        return Err(IngestError::InvalidArgument(format!(
            "cannot clean a {} table as {} records",
            table.kind,
            T::KIND
        )));
    }
    let mut report = CleaningReport {
        rows_read: table.rows.len(),
        ..CleaningReport::default()
    };
    let mut records = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let mut issues = RowIssues::new(row.index);
        match T::from_row(row, policy, &mut issues) {
            Some(record) => {
                report.rows_accepted += 1;
                if issues.repaired() {
                    report.rows_repaired += 1;
                }
                records.push(record);
            }
            None => report.rows_rejected += 1,
        }
        report.issues.extend(issues.issues);
    }
    if records.is_empty() {
        return Err(IngestError::EmptyDataset { dataset: table.kind });
    }
    debug_assert!(report.is_consistent());
    Ok((records, report))
}
