use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Entry, NGramModel, BOS, EOS, UNK};
use crate::error::{Error, Result};

/// log10 probability given to `<unk>` when an ARPA file does not list it.
const MISSING_UNK_LOGPROB: f64 = -100.0;

/// Writes the model in ARPA format. N-grams are sorted by their token
/// strings so the output is byte-stable.
pub fn write_arpa<W: Write>(model: &NGramModel, mut w: W) -> std::io::Result<()> {
    writeln!(w)?;
    writeln!(w, "\\data\\")?;
    for (n, table) in model.tables.iter().enumerate() {
        writeln!(w, "ngram {}={}", n + 1, table.len())?;
    }
    for (n, table) in model.tables.iter().enumerate() {
        writeln!(w)?;
        writeln!(w, "\\{}-grams:", n + 1)?;
        let mut rows: Vec<(Vec<&str>, &Entry)> = table
            .iter()
            .map(|(k, e)| (k.iter().map(|&i| model.words[i as usize].as_str()).collect(), e))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let top = n + 1 == model.order;
        for (words, e) in rows {
            if top {
                writeln!(w, "{}\t{}", e.logprob, words.join(" "))?;
            } else {
                writeln!(w, "{}\t{}\t{}", e.logprob, words.join(" "), e.backoff)?;
            }
        }
    }
    writeln!(w)?;
    writeln!(w, "\\end\\")?;
    Ok(())
}

pub fn save_arpa(model: &NGramModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_arpa(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_arpa(path: &Path) -> Result<NGramModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_arpa(&text)
}

fn arpa_err(section: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Arpa {
        section: section.into(),
        message: message.into(),
    }
}

fn parse_float(field: &str, section: &str, line_no: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| arpa_err(section, format!("line {line_no}: bad number {field:?}")))
}

pub fn parse_arpa(text: &str) -> Result<NGramModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    // header
    let mut found_data = false;
    for (_, line) in lines.by_ref() {
        if line == "\\data\\" {
            found_data = true;
            break;
        }
    }
    if !found_data {
        return Err(arpa_err("\\data\\", "missing \\data\\ header"));
    }
    let mut declared: Vec<usize> = Vec::new();
    let mut pending: Option<(usize, &str)> = None;
    for (line_no, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if let Some(spec) = line.strip_prefix("ngram ") {
            let (n, count) = spec
                .split_once('=')
                .ok_or_else(|| arpa_err("\\data\\", format!("line {line_no}: bad count line {line:?}")))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| arpa_err("\\data\\", format!("line {line_no}: bad order {n:?}")))?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| arpa_err("\\data\\", format!("line {line_no}: bad count {count:?}")))?;
            if n != declared.len() + 1 {
                return Err(arpa_err("\\data\\", format!("line {line_no}: orders must be listed 1..N")));
            }
            declared.push(count);
        } else {
            pending = Some((line_no, line));
            break;
        }
    }
    let order = declared.len();
    if order == 0 {
        return Err(arpa_err("\\data\\", "no ngram counts declared"));
    }

    let mut model = NGramModel {
        order,
        words: Vec::new(),
        ids: HashMap::new(),
        tables: vec![HashMap::new(); order],
    };
    let mut current: Option<usize> = None;
    let mut ended = false;
    let rest = pending.into_iter().chain(lines);
    for (line_no, line) in rest {
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            ended = true;
            break;
        }
        if line.starts_with('\\') {
            let n = line
                .strip_prefix('\\')
                .and_then(|l| l.strip_suffix("-grams:"))
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| arpa_err(line, format!("line {line_no}: unknown section")))?;
            if n == 0 || n > order {
                return Err(arpa_err(line, format!("line {line_no}: order {n} not declared in header")));
            }
            if let Some(prev) = current {
                check_count(&model, &declared, prev)?;
            }
            current = Some(n);
            continue;
        }
        let n = current.ok_or_else(|| arpa_err("\\data\\", format!("line {line_no}: entry outside any section")))?;
        let section = format!("\\{n}-grams:");
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != n + 1 && fields.len() != n + 2 {
            return Err(arpa_err(
                section,
                format!("line {line_no}: expected {} or {} fields, found {}", n + 1, n + 2, fields.len()),
            ));
        }
        let logprob = parse_float(fields[0], &section, line_no)?;
        let backoff = match fields.get(n + 1) {
            Some(f) => parse_float(f, &section, line_no)?,
            None => 0.0,
        };
        let key: Vec<u32> = fields[1..=n].iter().map(|w| model.intern(w)).collect();
        if model.tables[n - 1].insert(key, Entry { logprob, backoff }).is_some() {
            return Err(arpa_err(section, format!("line {line_no}: duplicate n-gram")));
        }
    }
    if !ended {
        return Err(arpa_err("\\end\\", "missing \\end\\ marker"));
    }
    if let Some(prev) = current {
        check_count(&model, &declared, prev)?;
    }
    for n in 1..=order {
        if model.tables[n - 1].len() != declared[n - 1] {
            return Err(arpa_err(
                format!("\\{n}-grams:"),
                format!("header declares {} entries, found {}", declared[n - 1], model.tables[n - 1].len()),
            ));
        }
    }
    for special in [BOS, EOS] {
        model.intern(special);
    }
    if !model.ids.contains_key(UNK) {
        let unk = model.intern(UNK);
        model.tables[0].insert(
            vec![unk],
            Entry {
                logprob: MISSING_UNK_LOGPROB,
                backoff: 0.0,
            },
        );
    }
    Ok(model)
}

fn check_count(model: &NGramModel, declared: &[usize], n: usize) -> Result<()> {
    let found = model.tables[n - 1].len();
    if found != declared[n - 1] {
        return Err(arpa_err(
            format!("\\{n}-grams:"),
            format!("header declares {} entries, found {found}", declared[n - 1]),
        ));
    }
    Ok(())
}
