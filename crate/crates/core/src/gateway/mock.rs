//! Offline provider that imitates a compliant model.
//!
//! Generation answers are assembled from phrase tables whose entries carry a
//! sentiment weight; a review for target `t` only uses phrases weighted
//! within 0.1 of `t`. Analysis answers average the weights of the phrases it
//! recognises and add bounded seeded noise, so a generated review is scored
//! within `0.1 + MOCK_NOISE` (plus rounding) of its target.

use async_trait::async_trait;
use chrono::{Duration, NaiveDate};

use crate::corpus::rng::{below, derive_seed, seeded, unit, PinnedRng};
use crate::corpus::{write_reviews, EmpStatus, Review, ReviewId, Source};
use crate::rubric::validate_score;

use super::parse::AnalysisResult;
use super::prompts::{ANALYSIS_INSTRUCTIONS, GENERATION_INSTRUCTIONS, TARGET_LABEL};
use super::{ChatProvider, ChatRequest, GatewayError};

/// Half-width of the uniform noise added to analysis scores.
pub const MOCK_NOISE: f64 = 0.05;

/// Phrases closer than this to the target are eligible for generation.
const PHRASE_WINDOW: f64 = 0.1 + 1e-9;

const PROS: &[(f64, &str)] = &[
    (0.0, "Paychecks cleared most of the time."),
    (0.0, "Free parking, at least."),
    (0.0, "The badge readers were broken, so nobody checked access."),
    (0.1, "Building had a functional elevator most days."),
    (0.1, "Water cooler was usually filled."),
    (0.1, "A few coworkers were tolerable."),
    (0.2, "Some coworkers were decent people."),
    (0.2, "The commute was short."),
    (0.2, "Learned what not to do as a manager."),
    (0.3, "Pay was on time."),
    (0.3, "Coworkers were friendly enough to vent to."),
    (0.3, "Office had decent snacks."),
    (0.4, "Benefits were standard."),
    (0.4, "My direct team was supportive."),
    (0.4, "Hours were predictable most weeks."),
    (0.5, "Competitive salary for the area."),
    (0.5, "Reasonable workload on most projects."),
    (0.5, "Good exposure to different technologies."),
    (0.6, "Solid benefits and a fair vacation policy."),
    (0.6, "Managers generally listen to feedback."),
    (0.6, "Plenty of chances to learn new tools."),
    (0.7, "Flexible schedule and remote options."),
    (0.7, "Supportive manager who trusts the team."),
    (0.7, "Training budget is actually used."),
    (0.8, "Great coworkers and a collaborative culture."),
    (0.8, "Leadership communicates openly about goals."),
    (0.8, "Generous bonuses tied to clear metrics."),
    (0.9, "Leadership genuinely cares about employee growth."),
    (0.9, "Excellent benefits and real work life balance."),
    (0.9, "Promotions are fair and transparent."),
    (1.0, "Best employer I have ever worked for."),
    (1.0, "Everyone is respected and valued here."),
    (1.0, "Outstanding mentorship and a truly ethical culture."),
];

const CONS: &[(f64, &str)] = &[
    (0.0, "Management deserves whatever revenge is coming to them."),
    (0.0, "I kept copies of the client database before I left."),
    (0.0, "Someone should sabotage their servers, and I know exactly how."),
    (0.1, "Data manipulated to hide problems."),
    (0.1, "Forced to misrepresent findings to stakeholders."),
    (0.1, "Executives steal credit and commit fraud openly."),
    (0.2, "Managers lied about pay and retaliated against complaints."),
    (0.2, "Toxic leadership that punishes honesty."),
    (0.2, "They deleted audit records to cover mistakes."),
    (0.3, "I hate how favoritism decides promotions."),
    (0.3, "Constant policy changes nobody explains."),
    (0.3, "Looking for another job as soon as possible."),
    (0.4, "Management ignores concerns raised in meetings."),
    (0.4, "Unclear priorities and frequent overtime."),
    (0.4, "Criticism is rarely constructive."),
    (0.5, "Some disorganization between departments."),
    (0.5, "Pay raises are small and slow."),
    (0.5, "Processes could be more efficient."),
    (0.6, "Pay could be a bit higher."),
    (0.6, "Meetings sometimes run long."),
    (0.6, "Parking fills up early."),
    (0.7, "Occasional busy seasons."),
    (0.7, "Cafeteria options are limited."),
    (0.7, "Some tools are a little outdated."),
    (0.8, "Hard to think of any real downsides."),
    (0.8, "Office coffee could be better."),
    (0.8, "Growth means some processes are still forming."),
    (0.9, "Nothing significant to complain about."),
    (0.9, "Sometimes too many team lunches."),
    (0.9, "Commute can be long, but worth it."),
    (1.0, "No cons at all."),
    (1.0, "I wish I had joined sooner."),
    (1.0, "Honestly cannot think of a single con."),
];

/// Word cues used when no table phrase is present (e.g. human reviews).
const CUES: &[(&str, f64)] = &[
    ("revenge", 0.05),
    ("sabotage", 0.05),
    ("leak", 0.1),
    ("steal", 0.1),
    ("stole", 0.1),
    ("fraud", 0.15),
    ("embezzl", 0.15),
    ("corrupt", 0.2),
    ("collu", 0.2),
    ("delet", 0.25),
    ("lied", 0.3),
    ("hate", 0.3),
    ("toxic", 0.3),
    ("harass", 0.3),
    ("retaliat", 0.25),
    ("caught", 0.35),
    ("unfair", 0.4),
    ("micromanag", 0.45),
    ("underpaid", 0.55),
    ("overtime", 0.55),
    ("pay", 0.65),
    ("paid", 0.65),
    ("okay", 0.6),
    ("good", 0.8),
    ("great", 0.85),
    ("love", 0.9),
    ("excellent", 0.9),
    ("amazing", 0.9),
];

const JOB_TITLES: &[&str] = &[
    "Software Engineer",
    "Data Analyst",
    "Accountant",
    "Sales Associate",
    "Customer Service Representative",
    "Project Manager",
    "Systems Administrator",
    "Marketing Coordinator",
    "Financial Analyst",
    "Warehouse Associate",
    "Registered Nurse",
    "HR Generalist",
    "Security Analyst",
    "Database Administrator",
    "Store Manager",
    "Operations Supervisor",
    "Research Scientist",
    "Compliance Officer",
    "Help Desk Technician",
    "Product Designer",
    "Payroll Specialist",
    "Network Engineer",
    "Quality Assurance Tester",
    "Business Analyst",
    "Account Executive",
    "Logistics Coordinator",
    "Teacher",
    "Pharmacist",
    "Procurement Specialist",
    "DevOps Engineer",
];

const EARLIEST: (i32, u32, u32) = (2020, 1, 15);
const LATEST: (i32, u32, u32) = (2024, 10, 23);

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Mean weight of the table phrases found in the text, falling back to word
/// cues, then to 0.5. Also returns how many indicators matched.
pub fn lexicon_polarity(pros: &str, cons: &str) -> (f64, usize) {
    let text = format!("{pros}\n{cons}");
    let phrases: Vec<f64> = PROS
        .iter()
        .chain(CONS)
        .filter(|(_, p)| text.contains(p))
        .map(|(w, _)| *w)
        .collect();
    if !phrases.is_empty() {
        return (phrases.iter().sum::<f64>() / phrases.len() as f64, phrases.len());
    }
    let lower = text.to_lowercase();
    let cues: Vec<f64> = CUES
        .iter()
        .filter(|(c, _)| lower.contains(c))
        .map(|(_, w)| *w)
        .collect();
    if cues.is_empty() {
        (0.5, 0)
    } else {
        (cues.iter().sum::<f64>() / cues.len() as f64, cues.len())
    }
}

/// Deterministic stand-in for a chat model.
#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn pick_two(rng: &mut PinnedRng, table: &[(f64, &'static str)], target: f64) -> [&'static str; 2] {
        let candidates: Vec<&'static str> = table
            .iter()
            .filter(|(w, _)| (w - target).abs() <= PHRASE_WINDOW)
            .map(|(_, p)| *p)
            .collect();
        let first = below(rng, candidates.len() as u64) as usize;
        let mut second = below(rng, candidates.len() as u64 - 1) as usize;
        if second >= first {
            second += 1;
        }
        [candidates[first], candidates[second]]
    }

    fn generate(&self, target: f64, nonce: u64) -> String {
        let mut rng = seeded(derive_seed(&[self.seed, target.to_bits(), nonce]));
        let earliest = NaiveDate::from_ymd_opt(EARLIEST.0, EARLIEST.1, EARLIEST.2).expect("valid date");
        let latest = NaiveDate::from_ymd_opt(LATEST.0, LATEST.1, LATEST.2).expect("valid date");
        let span = (latest - earliest).num_days() as u64 + 1;
        let date = earliest + Duration::days(below(&mut rng, span) as i64);
        let status = if below(&mut rng, 2) == 0 {
            EmpStatus::CurrentEmployee
        } else {
            EmpStatus::FormerEmployee
        };
        let title = JOB_TITLES[below(&mut rng, JOB_TITLES.len() as u64) as usize];
        let pros = Self::pick_two(&mut rng, PROS, target).join(" ");
        let cons = Self::pick_two(&mut rng, CONS, target).join(" ");

        let review = Review {
            id: ReviewId(1),
            orig_sentiment: Some(target),
            date_of_review: date,
            emp_status: status,
            job_title: title.to_string(),
            pros,
            cons,
            source: Source::Synthetic,
            extras: Default::default(),
        };
        let mut out = Vec::new();
        write_reviews(&[review], &mut out).expect("writing to a Vec cannot fail");
        let csv = String::from_utf8(out).expect("utf-8 output");
        // Real models often fence their CSV; do so one time in four.
        if below(&mut rng, 4) == 0 {
            format!("```csv\n{csv}```")
        } else {
            csv
        }
    }

    fn analyse(&self, user: &str, nonce: u64) -> String {
        let body = user.strip_prefix("Pros: ").unwrap_or(user);
        let (pros, cons) = body.split_once("\nCons: ").unwrap_or((body, ""));
        let (polarity, matches) = lexicon_polarity(pros, cons);
        let mut rng = seeded(derive_seed(&[self.seed, nonce, fnv1a(pros), fnv1a(cons)]));
        let noise = (2.0 * unit(&mut rng) - 1.0) * MOCK_NOISE;
        let score = validate_score((polarity + noise).clamp(0.0, 1.0)).expect("clamped into range");
        let confidence = validate_score((0.6 + 0.07 * matches as f64).min(0.95)).expect("in range");
        let explanation = match matches {
            0 => "No recognised insider threat indicators; neutral default".to_string(),
            n => format!(
                "{n} indicator(s) matched with mean polarity {polarity:.2}; level {}",
                crate::rubric::classify_score(score).expect("in range").level
            ),
        };
        AnalysisResult {
            score,
            confidence,
            explanation,
        }
        .to_csv_line()
    }
}

#[async_trait]
impl ChatProvider for MockProvider {
    async fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        if request.system == GENERATION_INSTRUCTIONS {
            let target = request
                .user
                .trim()
                .strip_prefix(TARGET_LABEL)
                .and_then(|t| t.trim().parse::<f64>().ok())
                .filter(|t| (0.0..=1.0).contains(t));
            return Ok(match target {
                Some(t) => self.generate(t, request.nonce),
                None => "I need a sentiment score between 0.0 and 1.0.".to_string(),
            });
        }
        if request.system == ANALYSIS_INSTRUCTIONS {
            return Ok(self.analyse(&request.user, request.nonce));
        }
        Ok("I can only generate or analyse job reviews.".to_string())
    }

    fn name(&self) -> String {
        format!("mock:{}", self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{
        parse_analysis_response, parse_generation_response, render_analysis_prompt,
        render_generation_prompt, ChatRequest,
    };
    use crate::rubric::{classify_score, ThreatLevel};

    fn run<F: std::future::Future>(f: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread().build().unwrap().block_on(f)
    }

    async fn generate(mock: &MockProvider, target: f64, nonce: u64) -> Review {
        let prompt = render_generation_prompt(target).unwrap();
        let raw = mock.complete(&ChatRequest::new(&prompt, 1.0, nonce)).await.unwrap();
        parse_generation_response(&raw).unwrap()
    }

    async fn analyse(mock: &MockProvider, review: &Review, nonce: u64) -> f64 {
        let prompt = render_analysis_prompt(review);
        let raw = mock.complete(&ChatRequest::new(&prompt, 0.0, nonce)).await.unwrap();
        parse_analysis_response(&raw).unwrap().score
    }

    #[test]
    fn phrase_tables_are_unambiguous() {
        let all: Vec<&str> = PROS.iter().chain(CONS).map(|(_, p)| *p).collect();
        for (i, a) in all.iter().enumerate() {
            assert!(a.split_whitespace().count() <= 15, "{a}");
            assert!(!a.contains('"'));
            for (j, b) in all.iter().enumerate() {
                if i != j {
                    assert!(!b.contains(a), "{a:?} inside {b:?}");
                }
            }
        }
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            for table in [PROS, CONS] {
                let n = table.iter().filter(|(w, _)| (w - t).abs() <= PHRASE_WINDOW).count();
                assert!(n >= 2, "too few phrases near {t}");
            }
        }
    }

    #[test]
    fn same_seed_same_transcript() {
        run(async {
            let a = MockProvider::new(11);
            let b = MockProvider::new(11);
            for i in 0..20u64 {
                let prompt = render_generation_prompt((i % 11) as f64 / 10.0).unwrap();
                let req = ChatRequest::new(&prompt, 1.0, i);
                assert_eq!(a.complete(&req).await.unwrap(), b.complete(&req).await.unwrap());
            }
            let prompt = render_generation_prompt(0.5).unwrap();
            let c = MockProvider::new(12);
            let outputs: std::collections::HashSet<String> = [
                a.complete(&ChatRequest::new(&prompt, 1.0, 0)).await.unwrap(),
                a.complete(&ChatRequest::new(&prompt, 1.0, 1)).await.unwrap(),
                c.complete(&ChatRequest::new(&prompt, 1.0, 0)).await.unwrap(),
            ]
            .into_iter()
            .collect();
            assert!(outputs.len() > 1);
        });
    }

    #[test]
    fn critical_target_uses_critical_phrases() {
        run(async {
            let mock = MockProvider::new(7);
            for nonce in 0..10 {
                let review = generate(&mock, 0.0, nonce).await;
                let critical = CONS
                    .iter()
                    .filter(|(w, _)| classify_score(*w).unwrap().level == ThreatLevel::Critical)
                    .any(|(_, p)| review.cons.contains(p));
                assert!(critical, "{}", review.cons);
                assert_eq!(review.orig_sentiment, Some(0.0));
            }
        });
    }

    #[test]
    fn analysis_tracks_generation_target() {
        // Every target of the default grid, 35 repetitions each.
        run(async {
            let mock = MockProvider::new(7);
            let mut worst: f64 = 0.0;
            for i in 0..=10 {
                let t = i as f64 / 10.0;
                for rep in 0..35 {
                    let nonce = (i * 35 + rep) as u64;
                    let review = generate(&mock, t, nonce).await;
                    let score = analyse(&mock, &review, nonce).await;
                    worst = worst.max((score - t).abs());
                }
            }
            assert!(worst <= 0.25, "worst deviation {worst}");
        });
    }

    #[test]
    fn unmatched_text_falls_back_to_cues() {
        assert_eq!(lexicon_polarity("nice view", ""), (0.5, 0));
        let (p, n) = lexicon_polarity("", "they stole my code, total fraud");
        assert_eq!(n, 2);
        assert!(p < 0.2);
    }

    #[test]
    fn unknown_prompts_get_unparseable_answers() {
        run(async {
            let mock = MockProvider::new(1);
            let req = ChatRequest {
                system: "Tell me a joke".into(),
                user: "please".into(),
                temperature: 0.0,
                nonce: 0,
            };
            let raw = mock.complete(&req).await.unwrap();
            assert!(parse_analysis_response(&raw).is_err());
        });
    }
}
