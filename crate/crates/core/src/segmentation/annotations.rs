//! Frame-level state annotations used to train the logistic emission model.
//!
//! CSV with header `record_id,frame_index,state`; state is one of S1, SYS,
//! S2, DIA.

use super::{HeartState, SegmentationError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRow {
    pub record_id: String,
    pub frame_index: usize,
    pub state: HeartState,
}

pub fn parse_annotations(bytes: &[u8]) -> Result<Vec<AnnotationRow>, SegmentationError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| SegmentationError::Annotation(format!("unreadable header: {e}")))?;
    let actual: Vec<&str> = headers.iter().collect();
    if actual != ["record_id", "frame_index", "state"] {
        return Err(SegmentationError::Annotation(format!(
            "header must be 'record_id,frame_index,state', got '{}'",
            actual.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| SegmentationError::Annotation(format!("row {}: {e}", line + 2)))?;
        if record.len() != 3 {
            return Err(SegmentationError::Annotation(format!(
                "row {}: expected 3 fields",
                line + 2
            )));
        }
        let frame_index: usize = record[1].parse().map_err(|_| {
            SegmentationError::Annotation(format!("row {}: bad frame_index '{}'", line + 2, &record[1]))
        })?;
        let state = match &record[2] {
            "S1" => HeartState::S1,
            "SYS" => HeartState::Systole,
            "S2" => HeartState::S2,
            "DIA" => HeartState::Diastole,
            other => {
                return Err(SegmentationError::Annotation(format!(
                    "row {}: state must be S1/SYS/S2/DIA, got '{other}'",
                    line + 2
                )))
            }
        };
        rows.push(AnnotationRow {
            record_id: record[0].to_string(),
            frame_index,
            state,
        });
    }
    Ok(rows)
}
