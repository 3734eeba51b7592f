use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};

use super::review::{format_date, parse_date};
use super::{CorpusError, Review, ReviewId, Source};

/// Standard column order of a review file.
pub const HEADER_COLUMNS: [&str; 6] = [
    "orig_sentiment",
    "date_of_review",
    "emp_status",
    "job_title",
    "pros",
    "cons",
];

/// Columns that must be present; `orig_sentiment` is optional because human
/// corpora carry no target score.
const REQUIRED: [&str; 5] = ["date_of_review", "emp_status", "job_title", "pros", "cons"];

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub source: Source,
    /// Maps a standard column name to the header name used by the input file.
    pub column_map: BTreeMap<String, String>,
}

impl ParseOptions {
    pub fn new(source: Source) -> Self {
        Self {
            source,
            column_map: BTreeMap::new(),
        }
    }
}

/// Parses a review file with the standard column names.
pub fn parse_reviews<R: Read>(input: R, source: Source) -> Result<Vec<Review>, CorpusError> {
    parse_reviews_with(input, &ParseOptions::new(source))
}

pub fn parse_reviews_with<R: Read>(
    input: R,
    options: &ParseOptions,
) -> Result<Vec<Review>, CorpusError> {
    let mut reader = ReaderBuilder::new()
        .delimiter(b'|')
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);

    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => {
            return Err(CorpusError::MissingColumns {
                missing: REQUIRED.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    let names: Vec<String> = header.iter().map(|h| h.trim().to_lowercase()).collect();

    let lookup = |canonical: &str| -> Option<usize> {
        let wanted = options
            .column_map
            .get(canonical)
            .map(|s| s.trim().to_lowercase())
            .unwrap_or_else(|| canonical.to_string());
        names.iter().position(|n| *n == wanted)
    };

    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|c| lookup(c).is_none())
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingColumns { missing });
    }
    let col = |c: &str| lookup(c).expect("checked above");
    let sentiment_col = lookup("orig_sentiment");
    let (date_col, status_col, title_col, pros_col, cons_col) = (
        col("date_of_review"),
        col("emp_status"),
        col("job_title"),
        col("pros"),
        col("cons"),
    );
    let known: BTreeSet<usize> = [sentiment_col, Some(date_col), Some(status_col)]
        .into_iter()
        .flatten()
        .chain([title_col, pros_col, cons_col])
        .collect();
    let extra_cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| !known.contains(i))
        .map(|(i, name)| (i, name.to_string()))
        .collect();

    let mut reviews = Vec::new();
    for record in records {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| CorpusError::Row { row, message };
        if record.len() != header.len() {
            return Err(row_err(format!(
                "expected {} columns, found {}",
                header.len(),
                record.len()
            )));
        }

        let orig_sentiment = match sentiment_col.map(|c| record[c].trim()) {
            None | Some("") => None,
            Some(raw) => {
                let value: f64 = raw
                    .parse()
                    .map_err(|_| row_err(format!("unparseable orig_sentiment {raw:?}")))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(row_err(format!("orig_sentiment {value} outside [0, 1]")));
                }
                Some(value)
            }
        };
        let date_of_review = parse_date(&record[date_col])
            .ok_or_else(|| row_err(format!("unparseable date {:?}", &record[date_col])))?;
        let emp_status = record[status_col].parse().map_err(row_err)?;
        let extras = extra_cols
            .iter()
            .map(|(i, name)| (name.clone(), record[*i].to_string()))
            .collect();

        reviews.push(Review {
            id: ReviewId(reviews.len() as u64 + 1),
            orig_sentiment,
            date_of_review,
            emp_status,
            job_title: record[title_col].to_string(),
            pros: record[pros_col].to_string(),
            cons: record[cons_col].to_string(),
            source: options.source,
            extras,
        });
    }
    Ok(reviews)
}

fn format_sentiment(value: f64) -> String {
    if value.fract() == 0.0 {
        format!("{value:.1}")
    } else {
        value.to_string()
    }
}

/// Writes reviews in the standard layout: unquoted header, every field
/// double-quoted, pipe delimiter, LF line endings.
///
/// Extra columns are appended after the standard six (sorted union of all
/// keys). Ids and source are not persisted; re-parsing assigns ids in file
/// order.
pub fn write_reviews<W: Write>(reviews: &[Review], mut target: W) -> Result<(), CorpusError> {
    let extra_keys: BTreeSet<&str> = reviews
        .iter()
        .flat_map(|r| r.extras.keys().map(String::as_str))
        .collect();

    let mut header = HEADER_COLUMNS.join("|");
    for key in &extra_keys {
        header.push('|');
        header.push_str(key);
    }
    header.push('\n');
    target.write_all(header.as_bytes())?;

    let mut writer = WriterBuilder::new()
        .delimiter(b'|')
        .quote_style(QuoteStyle::Always)
        .terminator(Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(target);
    for review in reviews {
        let mut fields = vec![
            review.orig_sentiment.map(format_sentiment).unwrap_or_default(),
            format_date(review.date_of_review),
            review.emp_status.label().to_string(),
            review.job_title.clone(),
            review.pros.clone(),
            review.cons.clone(),
        ];
        for key in &extra_keys {
            fields.push(review.extras.get(*key).cloned().unwrap_or_default());
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EmpStatus;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    const HEADER: &str = "orig_sentiment|date_of_review|emp_status|job_title|pros|cons\n";

    #[test]
    fn parses_the_reference_row() {
        let input = format!(
            "{HEADER}\"0.3\"|\"3/14/2022\"|\"Current Employee\"|\"Analyst\"|\"Good pay\"|\"Toxic team\"\n"
        );
        let reviews = parse_reviews(input.as_bytes(), Source::Synthetic).unwrap();
        assert_eq!(reviews.len(), 1);
        let r = &reviews[0];
        assert_eq!(r.id, ReviewId(1));
        assert_eq!(r.orig_sentiment, Some(0.3));
        assert_eq!(r.date_of_review, NaiveDate::from_ymd_opt(2022, 3, 14).unwrap());
        assert_eq!(r.emp_status, EmpStatus::CurrentEmployee);
        assert_eq!(r.job_title, "Analyst");
        assert_eq!(r.pros, "Good pay");
        assert_eq!(r.cons, "Toxic team");
        assert_eq!(r.source, Source::Synthetic);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_reviews(HEADER.as_bytes(), Source::Human).unwrap().is_empty());
    }

    #[test]
    fn short_row_is_rejected_with_line() {
        let input = format!(
            "{HEADER}\"0.3\"|\"3/14/2022\"|\"Current Employee\"|\"Analyst\"|\"Good pay\"|\"x\"\n\
             \"0.3\"|\"3/14/2022\"|\"Current Employee\"|\"Analyst\"|\"Good pay\"\n"
        );
        match parse_reviews(input.as_bytes(), Source::Human) {
            Err(CorpusError::Row { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("found 5"), "{message}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn missing_columns_are_named() {
        let err = parse_reviews("orig_sentiment|pros|cons\n".as_bytes(), Source::Human).unwrap_err();
        match err {
            CorpusError::MissingColumns { missing } => {
                assert_eq!(missing, vec!["date_of_review", "emp_status", "job_title"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_carry_row_numbers() {
        let bad_date = format!("{HEADER}\"0.3\"|\"13/1/2022\"|\"Current Employee\"|\"a\"|\"b\"|\"c\"\n");
        assert!(matches!(
            parse_reviews(bad_date.as_bytes(), Source::Human),
            Err(CorpusError::Row { row: 2, .. })
        ));
        let bad_score = format!("{HEADER}\"1.3\"|\"1/1/2022\"|\"Current Employee\"|\"a\"|\"b\"|\"c\"\n");
        assert!(matches!(
            parse_reviews(bad_score.as_bytes(), Source::Human),
            Err(CorpusError::Row { row: 2, .. })
        ));
    }

    #[test]
    fn human_corpus_with_extra_columns_and_mapping() {
        let input = "rating|date|emp_status|job_title|pros|cons\n\
                     4|2019-05-01|Former Employee, more than 1 year|Dev|ok|meh\n";
        let mut opts = ParseOptions::new(Source::Human);
        opts.column_map.insert("date_of_review".into(), "date".into());
        let reviews = parse_reviews_with(input.as_bytes(), &opts).unwrap();
        assert_eq!(reviews[0].orig_sentiment, None);
        assert_eq!(reviews[0].extras.get("rating").map(String::as_str), Some("4"));

        let mut out = Vec::new();
        write_reviews(&reviews, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("orig_sentiment|date_of_review|emp_status|job_title|pros|cons|rating\n"));
        assert_eq!(parse_reviews(text.as_bytes(), Source::Human).unwrap(), reviews);
    }

    #[test]
    fn metadata_lines_are_skipped() {
        let input = format!("# tool=x seed=7\n{HEADER}\"\"|\"1/15/2020\"|\"Former Employee\"|\"a\"|\"\"|\"\"\n");
        let reviews = parse_reviews(input.as_bytes(), Source::Human).unwrap();
        assert_eq!(reviews.len(), 1);
        assert_eq!(reviews[0].pros, "");
    }

    #[test]
    fn empty_list_writes_header_only() {
        let mut out = Vec::new();
        write_reviews(&[], &mut out).unwrap();
        assert_eq!(out, HEADER.as_bytes());
    }

    #[test]
    fn writer_quotes_every_field() {
        let review = Review {
            id: ReviewId(1),
            orig_sentiment: Some(1.0),
            date_of_review: NaiveDate::from_ymd_opt(2024, 10, 23).unwrap(),
            emp_status: EmpStatus::FormerEmployee,
            job_title: "QA".into(),
            pros: "said \"great\" | twice".into(),
            cons: String::new(),
            source: Source::Synthetic,
            extras: Default::default(),
        };
        let mut out = Vec::new();
        write_reviews(std::slice::from_ref(&review), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            r#""1.0"|"10/23/2024"|"Former Employee"|"QA"|"said ""great"" | twice"|"""#
        );
    }

    fn arb_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("|".to_string()),
                Just("\"".to_string()),
                Just("\n".to_string()),
                Just("\r\n".to_string()),
                Just("#".to_string()),
                Just(" ".to_string()),
                "[a-zA-Z0-9éü ,.'-]{1,8}",
            ],
            0..12,
        )
        .prop_map(|parts| parts.concat())
    }

    prop_compose! {
        fn arb_review()(
            sentiment in proptest::option::of(0.0f64..=1.0),
            days in 0i64..20_000,
            current in any::<bool>(),
            job_title in arb_text(),
            pros in arb_text(),
            cons in arb_text(),
        ) -> Review {
            Review {
                id: ReviewId(0),
                orig_sentiment: sentiment,
                date_of_review: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + chrono::Duration::days(days),
                emp_status: if current { EmpStatus::CurrentEmployee } else { EmpStatus::FormerEmployee },
                job_title,
                pros,
                cons,
                source: Source::Synthetic,
                extras: Default::default(),
            }
        }
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(mut reviews in proptest::collection::vec(arb_review(), 0..20)) {
            for (i, r) in reviews.iter_mut().enumerate() {
                r.id = ReviewId(i as u64 + 1);
            }
            let mut out = Vec::new();
            write_reviews(&reviews, &mut out).unwrap();
            let back = parse_reviews(out.as_slice(), Source::Synthetic).unwrap();
            prop_assert_eq!(back, reviews);
        }
    }
}
