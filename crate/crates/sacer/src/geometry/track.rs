//! Track-file ingest: delimiter-separated text with a header row, one vehicle
//! observation per line.

use super::GeometryError;
use serde::{Deserialize, Serialize};
use std::io::Read;

/// One observation row of a track file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub track_id: i64,
    pub frame_id: i64,
    pub timestamp_ms: i64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl TrackRecord {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Header names for each logical column. Defaults follow the common
/// track-file convention (track_id, frame_id, timestamp_ms, agent_type, x, y,
/// vx, vy, psi_rad, length, width); agent_type is ignored when present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackSchema {
    pub track_id: String,
    pub frame_id: String,
    pub timestamp_ms: String,
    pub x: String,
    pub y: String,
    pub vx: String,
    pub vy: String,
    pub psi_rad: String,
    pub length: String,
    pub width: String,
}

impl Default for TrackSchema {
    fn default() -> Self {
        Self {
            track_id: "track_id".into(),
            frame_id: "frame_id".into(),
            timestamp_ms: "timestamp_ms".into(),
            x: "x".into(),
            y: "y".into(),
            vx: "vx".into(),
            vy: "vy".into(),
            psi_rad: "psi_rad".into(),
            length: "length".into(),
            width: "width".into(),
        }
    }
}

struct ColumnIndices {
    track_id: usize,
    frame_id: usize,
    timestamp_ms: usize,
    x: usize,
    y: usize,
    vx: usize,
    vy: usize,
    psi_rad: usize,
    length: usize,
    width: usize,
}

impl ColumnIndices {
    fn resolve(headers: &csv::StringRecord, schema: &TrackSchema) -> Result<Self, GeometryError> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| GeometryError::MissingColumn(name.to_string()))
        };
        Ok(Self {
            track_id: find(&schema.track_id)?,
            frame_id: find(&schema.frame_id)?,
            timestamp_ms: find(&schema.timestamp_ms)?,
            x: find(&schema.x)?,
            y: find(&schema.y)?,
            vx: find(&schema.vx)?,
            vy: find(&schema.vy)?,
            psi_rad: find(&schema.psi_rad)?,
            length: find(&schema.length)?,
            width: find(&schema.width)?,
        })
    }
}

/// Parse a track file. Rows come back grouped by track and sorted by
/// timestamp within each track.
pub fn load_tracks<R: Read>(reader: R, schema: &TrackSchema) -> Result<Vec<TrackRecord>, GeometryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| GeometryError::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols = ColumnIndices::resolve(&headers, schema)?;

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| GeometryError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |idx: usize, name: &str| -> Result<&str, GeometryError> {
            row.get(idx).ok_or_else(|| GeometryError::MalformedRow {
                line,
                message: format!("missing field {name}"),
            })
        };
        let parse_f64 = |idx: usize, name: &str| -> Result<f64, GeometryError> {
            let raw = field(idx, name)?;
            raw.parse::<f64>().map_err(|_| GeometryError::MalformedRow {
                line,
                message: format!("non-numeric {name}: {raw:?}"),
            })
        };
        let parse_i64 = |idx: usize, name: &str| -> Result<i64, GeometryError> {
            let raw = field(idx, name)?;
            // Integer ids sometimes come formatted as floats.
            raw.parse::<i64>()
                .or_else(|_| raw.parse::<f64>().map(|v| v as i64))
                .map_err(|_| GeometryError::MalformedRow {
                    line,
                    message: format!("non-numeric {name}: {raw:?}"),
                })
        };

        let rec = TrackRecord {
            track_id: parse_i64(cols.track_id, "track_id")?,
            frame_id: parse_i64(cols.frame_id, "frame_id")?,
            timestamp_ms: parse_i64(cols.timestamp_ms, "timestamp_ms")?,
            x: parse_f64(cols.x, "x")?,
            y: parse_f64(cols.y, "y")?,
            vx: parse_f64(cols.vx, "vx")?,
            vy: parse_f64(cols.vy, "vy")?,
            heading: parse_f64(cols.psi_rad, "psi_rad")?,
            length: parse_f64(cols.length, "length")?,
            width: parse_f64(cols.width, "width")?,
        };
        if rec.length <= 0.0 || rec.width <= 0.0 {
            return Err(GeometryError::MalformedRow {
                line,
                message: format!(
                    "non-positive vehicle dimensions {}x{}",
                    rec.length, rec.width
                ),
            });
        }
        records.push(rec);
    }

    records.sort_by_key(|r| (r.track_id, r.timestamp_ms));
    for w in records.windows(2) {
        if w[0].track_id == w[1].track_id && w[0].timestamp_ms == w[1].timestamp_ms {
            return Err(GeometryError::DuplicateTimestamp {
                track_id: w[0].track_id,
                timestamp_ms: w[0].timestamp_ms,
            });
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "track_id,frame_id,timestamp_ms,agent_type,x,y,vx,vy,psi_rad,length,width";

    fn parse(body: &str) -> Result<Vec<TrackRecord>, GeometryError> {
        load_tracks(body.as_bytes(), &TrackSchema::default())
    }

    #[test]
    fn three_rows_one_track() {
        let text = format!(
            "{HEADER}\n1,1,100,car,0.0,0.0,5.0,0.0,0.0,4.5,1.8\n1,2,200,car,0.5,0.0,5.0,0.0,0.0,4.5,1.8\n1,3,300,car,1.0,0.0,5.0,0.0,0.0,4.5,1.8\n"
        );
        let recs = parse(&text).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.windows(2).all(|w| w[0].timestamp_ms < w[1].timestamp_ms));
        assert_eq!(recs[0].speed(), 5.0);
    }

    #[test]
    fn header_only_gives_empty_list() {
        let recs = parse(&format!("{HEADER}\n")).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn out_of_order_rows_are_resorted() {
        let text = format!(
            "{HEADER}\n1,3,300,car,1.0,0.0,5.0,0.0,0.0,4.5,1.8\n1,1,100,car,0.0,0.0,5.0,0.0,0.0,4.5,1.8\n2,1,100,car,9.0,0.0,1.0,0.0,0.0,4.5,1.8\n1,2,200,car,0.5,0.0,5.0,0.0,0.0,4.5,1.8\n"
        );
        let recs = parse(&text).unwrap();
        // Oracle: independently sort the parsed key tuples.
        let mut keys: Vec<(i64, i64)> = recs.iter().map(|r| (r.track_id, r.timestamp_ms)).collect();
        let sorted = {
            let mut k = keys.clone();
            k.sort();
            k
        };
        keys.sort();
        assert_eq!(keys, sorted);
        assert_eq!(
            recs.iter().map(|r| (r.track_id, r.timestamp_ms)).collect::<Vec<_>>(),
            vec![(1, 100), (1, 200), (1, 300), (2, 100)]
        );
    }

    #[test]
    fn missing_column_reported() {
        let text = "track_id,frame_id,x,y\n1,1,0.0,0.0\n";
        match parse(text) {
            Err(GeometryError::MissingColumn(c)) => assert_eq!(c, "timestamp_ms"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_carries_line_number() {
        let text = format!(
            "{HEADER}\n1,1,100,car,0.0,0.0,5.0,0.0,0.0,4.5,1.8\n1,2,200,car,oops,0.0,5.0,0.0,0.0,4.5,1.8\n"
        );
        match parse(&text) {
            Err(GeometryError::MalformedRow { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("x"), "message: {message}");
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamp_rejected() {
        let text = format!(
            "{HEADER}\n1,1,100,car,0.0,0.0,5.0,0.0,0.0,4.5,1.8\n1,2,100,car,0.5,0.0,5.0,0.0,0.0,4.5,1.8\n"
        );
        assert!(matches!(
            parse(&text),
            Err(GeometryError::DuplicateTimestamp { track_id: 1, timestamp_ms: 100 })
        ));
    }
}
