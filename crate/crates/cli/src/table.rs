use serde_json::Value;

/// A query result as received over the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Rendered {
    pub fn from_json(body: &Value) -> Option<Self> {
        let columns = body["columns"]
            .as_array()?
            .iter()
            .map(|c| c["name"].as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()?;
        let rows = body["rows"]
            .as_array()?
            .iter()
            .map(|r| r.as_array().cloned())
            .collect::<Option<Vec<_>>>()?;
        Some(Self { columns, rows })
    }

    fn cell(v: &Value, null: &str) -> String {
        match v {
            Value::Null => null.to_string(),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }

    /// RFC 4180 CSV with a header row; nulls are empty fields.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| Self::cell(v, ""))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 input")
    }

    /// Column-aligned text with numbers right-aligned.
    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| Self::cell(v, "NULL")).collect())
            .collect();
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|i| self.rows.iter().all(|r| r[i].is_number() || r[i].is_null()) && !self.rows.is_empty())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain(std::iter::once(self.columns[i].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |values: &[String]| {
            values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if numeric[i] {
                        format!("{v:>w$}", w = widths[i])
                    } else {
                        format!("{v:<w$}", w = widths[i])
                    }
                })
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.columns);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        out.push('\n');
        for r in &cells {
            out.push_str(&line(r));
            out.push('\n');
        }
        let n = self.rows.len();
        out.push_str(&format!("({n} row{})\n", if n == 1 { "" } else { "s" }));
        out
    }
}

/// Points at `offset` (a byte offset) under the offending line of `sql`.
pub fn caret(sql: &str, offset: usize) -> String {
    let offset = offset.min(sql.len());
    let start = sql[..offset].rfind('\n').map_or(0, |i| i + 1);
    let end = sql[offset..].find('\n').map_or(sql.len(), |i| offset + i);
    let column = sql[start..offset].chars().count();
    format!("{}\n{}^", &sql[start..end], " ".repeat(column))
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    fn sample() -> Rendered {
        Rendered::from_json(&json!({
            "columns": [{"name": "NAME", "type": "text"}, {"name": "N", "type": "int64"}],
            "rows": [["Supplier A", 3], ["B, \"quoted\"", null]],
        }))
        .unwrap()
    }

    #[test]
    fn text_aligns_columns() {
        let text = sample().to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "NAME        |    N");
        assert_eq!(lines[1], "------------+-----");
        assert_eq!(lines[2], "Supplier A  |    3");
        assert_eq!(lines[3], "B, \"quoted\" | NULL");
        assert_eq!(lines[4], "(2 rows)");
    }

    #[test]
    fn csv_quotes_and_leaves_nulls_empty() {
        assert_eq!(sample().to_csv(), "NAME,N\nSupplier A,3\n\"B, \"\"quoted\"\"\",\n");
    }

    #[test]
    fn caret_marks_the_offset_on_its_line() {
        assert_eq!(caret("SELECT x\nFROM WHERE", 14), "FROM WHERE\n     ^");
        assert_eq!(caret("SELECT", 6), "SELECT\n      ^");
    }
}
