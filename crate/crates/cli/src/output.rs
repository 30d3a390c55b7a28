use crate::args::OutputFormat;

/// Renders rows as CSV or as a space-aligned table.
pub fn render(format: OutputFormat, header: &[&str], rows: &[Vec<String>]) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = header.join(",");
            s.push('\n');
            for r in rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
            s
        }
        OutputFormat::Table => {
            let mut w: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (i, c) in r.iter().enumerate() {
                    w[i] = w[i].max(c.len());
                }
            }
            let line = |cells: Vec<&str>| {
                let mut s = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{c:>width$}", width = w[i]))
                    .collect::<Vec<_>>()
                    .join("  ");
                s.push('\n');
                s
            };
            let mut s = line(header.to_vec());
            s.push_str(&line(w.iter().map(|&n| &"------------------------------------------------"[..n.min(48)]).collect()));
            for r in rows {
                s.push_str(&line(r.iter().map(String::as_str).collect()));
            }
            s
        }
    }
}
