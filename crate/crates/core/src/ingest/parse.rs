use std::collections::HashMap;

use super::clean::{CleaningPolicy, RowIssues};
use super::profile::{OrderHistoryEntry, PerformanceObservation};
use super::{normalize_header, DatasetKind, IngestError, SkuRecord, SupplierProfile};

pub(crate) const DEMAND_COLUMNS: &[&str] = &[
    "product_type",
    "sku",
    "price",
    "availability",
    "number_of_products_sold",
    "revenue_generated",
    "customer_demographics",
    "stock_levels",
    "order_quantities",
];

pub(crate) const SUPPLIER_COLUMNS: &[&str] = &[
    "supplier_name",
    "location",
    "lead_time",
    "production_volumes",
    "manufacturing_lead_time",
    "manufacturing_costs",
    "inspection_results",
    "defect_rates",
    "transportation_modes",
    "routes",
    "costs",
];

pub(crate) const HISTORY_COLUMNS: &[&str] = &["sku", "supplier_name", "orders_count"];

pub(crate) const PERFORMANCE_COLUMNS: &[&str] = &[
    "supplier_name",
    "lead_time",
    "unit_cost",
    "production_volume",
    "defect_rate",
    "inspection_score",
    "on_time_in_full",
];

/// A record type with a fixed CSV schema.
pub trait TableRecord: Sized {
    const KIND: DatasetKind;
    /// Canonical column order; also the serialization order.
    const COLUMNS: &'static [&'static str];

    /// Converts a raw row, recording every problem and repair in `issues`.
    /// Returns `None` when the row has to be rejected.
    fn from_row(row: &RawRow, policy: CleaningPolicy, issues: &mut RowIssues) -> Option<Self>;

    fn to_cells(&self) -> Vec<String>;
}

/// Cells of one data row, re-ordered into the canonical column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    /// Zero-based data row index (the header is not counted).
    pub index: usize,
    pub cells: Vec<String>,
}

impl RawRow {
    pub(crate) fn cell(&self, column: usize) -> &str {
        self.cells.get(column).map(String::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub kind: DatasetKind,
    pub columns: &'static [&'static str],
    pub rows: Vec<RawRow>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn columns_for(kind: DatasetKind) -> &'static [&'static str] {
    match kind {
        DatasetKind::Demand => DEMAND_COLUMNS,
        DatasetKind::Supplier => SUPPLIER_COLUMNS,
        DatasetKind::History => HISTORY_COLUMNS,
        DatasetKind::Performance => PERFORMANCE_COLUMNS,
    }
}

/// Reads `csv_text` against the schema for `kind`.
///
/// Columns are matched by normalized header name, so column order and
/// header spelling (`Lead time` vs `lead_time`) do not matter. Extra columns
/// are ignored. Cell values are kept verbatim (trimmed); type conversion and
/// validation happen in [`clean_records`](super::clean_records) so that a
/// bad cell becomes a reported row issue rather than a silent default.
pub fn parse_dataset(csv_text: &str, kind: DatasetKind) -> Result<RawTable, IngestError> {
    let columns = columns_for(kind);
    let csv_err = |e: csv::Error| IngestError::Csv {
        dataset: kind,
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());

    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut position: HashMap<String, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        position.entry(normalize_header(h)).or_insert(i);
    }
    let mapping = columns
        .iter()
        .map(|c| {
            position.get(*c).copied().ok_or_else(|| IngestError::MissingColumn {
                dataset: kind,
                column: (*c).to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let cells = mapping
            .iter()
            .map(|&i| record.get(i).unwrap_or("").to_string())
            .collect();
        rows.push(RawRow { index, cells });
    }
    Ok(RawTable { kind, columns, rows })
}

fn write_rows<I>(columns: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    writer.write_record(columns).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Serializes records with the canonical header and column order.
pub fn write_csv<T: TableRecord>(records: &[T]) -> String {
    write_rows(T::COLUMNS, records.iter().map(TableRecord::to_cells))
}

pub fn write_history(entries: &[OrderHistoryEntry]) -> String {
    write_rows(
        HISTORY_COLUMNS,
        entries
            .iter()
            .map(|e| vec![e.sku_id.clone(), e.supplier_id.clone(), e.orders_count.to_string()]),
    )
}

pub fn write_performance(observations: &[PerformanceObservation]) -> String {
    write_rows(
        PERFORMANCE_COLUMNS,
        observations.iter().map(|o| {
            let mut cells = vec![o.supplier_id.clone()];
            cells.extend(o.features.iter().map(|v| v.to_string()));
            cells.push(o.on_time_in_full.to_string());
            cells
        }),
    )
}

fn strict_rows(csv_text: &str, kind: DatasetKind) -> Result<Vec<RawRow>, IngestError> {
    Ok(parse_dataset(csv_text, kind)?.rows)
}

fn invalid(kind: DatasetKind, row: usize, message: String) -> IngestError {
    IngestError::InvalidRow {
        dataset: kind,
        row,
        message,
    }
}

/// Parses the order-history table. Any malformed row is an error; an
/// empty table is valid and yields an empty history.
pub fn parse_history(csv_text: &str) -> Result<Vec<OrderHistoryEntry>, IngestError> {
    let kind = DatasetKind::History;
    strict_rows(csv_text, kind)?
        .into_iter()
        .map(|row| {
            let sku_id = row.cell(0).to_string();
            let supplier_id = row.cell(1).to_string();
            if sku_id.is_empty() || supplier_id.is_empty() {
                return Err(invalid(kind, row.index, "missing sku or supplier_name".into()));
            }
            let orders_count = row.cell(2).parse::<u64>().map_err(|_| {
                invalid(
                    kind,
                    row.index,
                    format!("orders_count `{}` is not a non-negative integer", row.cell(2)),
                )
            })?;
            Ok(OrderHistoryEntry {
                sku_id,
                supplier_id,
                orders_count,
            })
        })
        .collect()
}

/// Parses supplier performance observations (training data for the
/// supervised scorer).
pub fn parse_performance(csv_text: &str) -> Result<Vec<PerformanceObservation>, IngestError> {
    let kind = DatasetKind::Performance;
    strict_rows(csv_text, kind)?
        .into_iter()
        .map(|row| {
            let supplier_id = row.cell(0).to_string();
            if supplier_id.is_empty() {
                return Err(invalid(kind, row.index, "missing supplier_name".into()));
            }
            let mut values = [0.0; 6];
            for (k, slot) in values.iter_mut().enumerate() {
                let cell = row.cell(k + 1);
                *slot = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    invalid(
                        kind,
                        row.index,
                        format!("`{}` value `{cell}` is not a finite number", PERFORMANCE_COLUMNS[k + 1]),
                    )
                })?;
            }
            let [a, b, c, d, e, label] = values;
            Ok(PerformanceObservation {
                supplier_id,
                features: [a, b, c, d, e],
                on_time_in_full: label,
            })
        })
        .collect()
}

impl TableRecord for SkuRecord {
    const KIND: DatasetKind = DatasetKind::Demand;
    const COLUMNS: &'static [&'static str] = DEMAND_COLUMNS;

    fn from_row(row: &RawRow, _policy: CleaningPolicy, issues: &mut RowIssues) -> Option<Self> {
        let sku_id = issues.id(row, 1, "sku");
        let product_type = row.cell(0).to_string();
        let price = issues.non_negative_real(row, 2, "price");
        let availability = issues.count(row, 3, "availability");
        let units_sold = issues.count(row, 4, "number_of_products_sold");
        let revenue = issues.non_negative_real(row, 5, "revenue_generated");
        let customer_demographic = row.cell(6).to_string();
        let stock_level = issues.count(row, 7, "stock_levels");
        let order_quantity = issues.count(row, 8, "order_quantities");
        Some(SkuRecord {
            sku_id: sku_id?,
            product_type,
            price: price?,
            availability: availability?,
            units_sold: units_sold?,
            revenue: revenue?,
            customer_demographic,
            stock_level: stock_level?,
            order_quantity: order_quantity?,
        })
    }

    fn to_cells(&self) -> Vec<String> {
        vec![
            self.product_type.clone(),
            self.sku_id.clone(),
            self.price.to_string(),
            self.availability.to_string(),
            self.units_sold.to_string(),
            self.revenue.to_string(),
            self.customer_demographic.clone(),
            self.stock_level.to_string(),
            self.order_quantity.to_string(),
        ]
    }
}

impl TableRecord for SupplierProfile {
    const KIND: DatasetKind = DatasetKind::Supplier;
    const COLUMNS: &'static [&'static str] = SUPPLIER_COLUMNS;

    fn from_row(row: &RawRow, policy: CleaningPolicy, issues: &mut RowIssues) -> Option<Self> {
        let supplier_id = issues.id(row, 0, "supplier_name");
        let location = row.cell(1).to_string();
        let lead_time = issues.positive_real(row, 2, "lead_time");
        let production_volume = issues.count(row, 3, "production_volumes");
        let manufacturing_lead_time = issues.non_negative_real(row, 4, "manufacturing_lead_time");
        let manufacturing_cost = issues.non_negative_real(row, 5, "manufacturing_costs");
        let inspection_result = issues.inspection(row, 6, "inspection_results", policy);
        let defect_rate = issues.fraction(row, 7, "defect_rates", policy);
        let transport_mode = issues.transport(row, 8, "transportation_modes");
        let route = row.cell(9).to_string();
        let shipping_cost = issues.non_negative_real(row, 10, "costs");
        Some(SupplierProfile {
            supplier_id: supplier_id?,
            location,
            lead_time: lead_time?,
            production_volume: production_volume?,
            manufacturing_lead_time: manufacturing_lead_time?,
            manufacturing_cost: manufacturing_cost?,
            inspection_result: inspection_result?,
            defect_rate: defect_rate?,
            transport_mode: transport_mode?,
            route,
            shipping_cost: shipping_cost?,
        })
    }

    fn to_cells(&self) -> Vec<String> {
        vec![
            self.supplier_id.clone(),
            self.location.clone(),
            self.lead_time.to_string(),
            self.production_volume.to_string(),
            self.manufacturing_lead_time.to_string(),
            self.manufacturing_cost.to_string(),
            self.inspection_result.to_string(),
            self.defect_rate.to_string(),
            self.transport_mode.to_string(),
            self.route.clone(),
            self.shipping_cost.to_string(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{clean_records, InspectionResult, TransportMode};

    const SUPPLIER_CSV: &str = "\
supplier_name,location,lead_time,production_volumes,manufacturing_lead_time,manufacturing_costs,inspection_results,defect_rates,transportation_modes,routes,costs
Supplier 3,Mumbai,5,400,12,10,Pass,0.02,Road,Route A,2
Supplier 1,Delhi,10,250,7,8.5,Fail,0.1,Air,Route B,3.25
";

    #[test]
    fn kaggle_style_row_with_extra_columns() {
        // Mixed-case headers with spaces plus an unrelated SKU column.
        let csv = "SKU,Supplier name,Location,Lead time,Production volumes,Manufacturing lead time,\
Manufacturing costs,Inspection results,Defect rates,Transportation modes,Routes,Costs\n\
SKU32,Supplier 3,Mumbai,5,400,12,10,Pass,0.02,Road,Route A,2\n";
        let table = parse_dataset(csv, DatasetKind::Supplier).unwrap();
        let (suppliers, _) = clean_records::<SupplierProfile>(&table, CleaningPolicy::Strict).unwrap();
        assert_eq!(suppliers.len(), 1);
        let s = &suppliers[0];
        assert_eq!(s.supplier_id, "Supplier 3");
        assert_eq!(s.lead_time, 5.0);
        assert_eq!(s.inspection_result, InspectionResult::Pass);
        assert_eq!(s.transport_mode, TransportMode::Road);
        assert_eq!(s.unit_cost(), 12.0);
    }

    #[test]
    fn header_only_is_empty() {
        let table = parse_dataset(SUPPLIER_CSV.lines().next().unwrap(), DatasetKind::Supplier).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn shuffled_columns_parse_identically() {
        let canonical = parse_dataset(SUPPLIER_CSV, DatasetKind::Supplier).unwrap();
        // Reverse the column order of every line.
        let shuffled: String = SUPPLIER_CSV
            .lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                cells.reverse();
                cells.join(",") + "\n"
            })
            .collect();
        let reordered = parse_dataset(&shuffled, DatasetKind::Supplier).unwrap();
        assert_eq!(canonical, reordered);
        let a = clean_records::<SupplierProfile>(&canonical, CleaningPolicy::Strict).unwrap();
        let b = clean_records::<SupplierProfile>(&reordered, CleaningPolicy::Strict).unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn missing_column_is_named() {
        let csv = SUPPLIER_CSV.replace("lead_time,", "lead,");
        match parse_dataset(&csv, DatasetKind::Supplier) {
            Err(IngestError::MissingColumn { column, .. }) => assert_eq!(column, "lead_time"),
            other => panic!("expected missing column, got {other:?}"),
        }
    }

    #[test]
    fn canonical_round_trip() {
        let table = parse_dataset(SUPPLIER_CSV, DatasetKind::Supplier).unwrap();
        let (suppliers, _) = clean_records::<SupplierProfile>(&table, CleaningPolicy::Strict).unwrap();
        assert_eq!(write_csv(&suppliers), SUPPLIER_CSV);
    }

    #[test]
    fn history_rejects_bad_count() {
        let err = parse_history("sku,supplier_name,orders_count\nSKU1,Supplier 1,x\n").unwrap_err();
        assert!(matches!(err, IngestError::InvalidRow { row: 0, .. }));
        assert!(parse_history("sku,supplier_name,orders_count\n").unwrap().is_empty());
    }
}
