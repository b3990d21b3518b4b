use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::grammar::format_event_string;
use super::provider::{Provider, ProviderError, ProviderKind, ProviderRequest, Task};
use super::GenerationContext;
use crate::career::{CompletionReason, EventCategory, SentimentLabel, UserProfile};
use crate::report::JourneySummary;

struct Track {
    field: &'static str,
    keywords: &'static [&'static str],
    milestones: [(&'static str, &'static str); 6],
    skills: &'static [(&'static str, &'static str)],
    pivots: &'static [&'static str],
}

const TRACKS: [Track; 4] = [
    Track {
        field: "Research",
        keywords: &["phd", "research", "professor", "academ", "doctor", "scholar", "lab", "thesis"],
        milestones: [
            ("Join a Research Lab", "You start working with a faculty advisor on a funded project. Weekly meetings set the rhythm of your first semester."),
            ("First Workshop Paper", "Your first study is accepted at a workshop. Presenting it brings your work in front of senior researchers for the first time."),
            ("Lead a Full Study", "You design and run a complete study on your own. The data you collect becomes the core of a conference submission."),
            ("Conference Acceptance", "A full paper is accepted at a major venue. Reviewers single out the rigor of your method."),
            ("Prepare PhD Applications", "You assemble statements, writing samples and letters. Several labs invite you to interviews."),
            ("Begin Doctoral Studies", "You accept an offer from a doctoral program. The two-year plan closes with a funded position and a clear agenda."),
        ],
        skills: &[
            ("Literature Review", "You learn to map a field by tracing citations backward and forward. Summaries of each paper become a searchable personal library."),
            ("Experimental Design", "You practice choosing conditions, measures and sample sizes. Pilot runs expose flaws before they cost real participants."),
            ("Statistical Analysis", "You move from descriptive summaries to mixed models. Reporting effect sizes becomes a habit."),
            ("Academic Writing", "You draft, cut and restructure papers with your advisor. Each revision makes the argument tighter."),
            ("Qualitative Coding", "You learn to build and refine a codebook from interview data. Themes emerge only after several passes."),
            ("Grant Writing", "You help assemble a proposal for a small grant. Framing impact for reviewers turns out to be a craft of its own."),
            ("Peer Review", "You review submissions for a workshop. Reading others' drafts sharpens how you judge your own."),
            ("Research Ethics", "You complete training on consent and data handling. Protocols you write now pass review on the first try."),
            ("Presentation Skills", "You rehearse talks until they fit the slot exactly. Questions from the audience stop feeling like attacks."),
        ],
        pivots: &["Industry Research", "Data Science", "Science Policy", "AR/VR"],
    },
    Track {
        field: "Engineering",
        keywords: &["engineer", "software", "developer", "programm", "coding", "backend", "computer", "devops"],
        milestones: [
            ("Land an Internship", "You join a product team as a software intern. Code review teaches you how a large codebase stays healthy."),
            ("Ship a First Feature", "A feature you built reaches real users. Monitoring dashboards show it holding up under load."),
            ("Join a Full-Time Team", "You accept a full-time offer on a platform team. On-call rotations start in your second month."),
            ("Own a Service", "You become the primary owner of a production service. Its reliability now depends on your decisions."),
            ("Lead a Migration", "You plan and lead a migration across several teams. Careful rollouts keep downtime to minutes."),
            ("Promotion to Senior Engineer", "Your manager nominates you for promotion. The committee cites your technical leadership across teams."),
        ],
        skills: &[
            ("Version Control", "You learn to keep history clean with small commits and focused branches. Rebasing no longer feels risky."),
            ("Automated Testing", "You write unit and integration tests before fixing bugs. Regressions become rare."),
            ("System Design", "You sketch components, data flows and failure modes before coding. Trade-offs become explicit."),
            ("Debugging Production", "You trace failures through logs, metrics and traces. Incidents get shorter each time."),
            ("Code Review", "You give and receive reviews daily. Your comments shift from style to structure."),
            ("Cloud Infrastructure", "You provision services with infrastructure as code. Environments become reproducible."),
            ("Performance Profiling", "You measure before optimizing and find the real hot spots. Latency drops where it matters."),
            ("Technical Writing", "You write design documents that others can act on. Meetings get shorter."),
            ("Mentoring", "You pair with newer engineers on their first tasks. Explaining decisions clarifies your own thinking."),
        ],
        pivots: &["Product Management", "Machine Learning", "Developer Relations", "Founding a Startup"],
    },
    Track {
        field: "Design",
        keywords: &["design", "ux", "ui", "hci", "interaction", "creative", "art", "visual"],
        milestones: [
            ("Enroll in a Design Program", "You begin a program focused on interaction design. Studio critiques fill most afternoons."),
            ("Complete a Studio Project", "Your team delivers a full project from research to prototype. The final critique praises its clarity."),
            ("Design Internship", "You join a product design team for the summer. Your prototypes are tested with real customers."),
            ("Build a Portfolio", "You curate case studies that show your process end to end. Recruiters start reaching out."),
            ("First Design Role", "You accept a role as a product designer. Your first project ships within three months."),
            ("Lead a Product Area", "You become the lead designer for a product area. Roadmap discussions now include your research."),
        ],
        skills: &[
            ("User Interviews", "You learn to ask open questions and let silence work. Notes turn into clear personas."),
            ("Wireframing", "You sketch layouts quickly at low fidelity. Ideas get tested before anyone gets attached."),
            ("Usability Testing", "You run sessions with think-aloud protocols. Findings are ranked by severity."),
            ("Visual Hierarchy", "You practice guiding attention with type, scale and color. Screens become easier to scan."),
            ("Interactive Prototyping", "You build clickable prototypes that feel close to the real product. Stakeholders react to flows rather than slides."),
            ("Design Systems", "You contribute components to a shared library. Consistency across teams improves."),
            ("Accessibility", "You audit designs for contrast and keyboard use. Inclusive choices become defaults."),
            ("Information Architecture", "You organize content with card sorts and tree tests. Navigation stops confusing users."),
            ("Storytelling", "You present work as a narrative from problem to outcome. Reviews move faster."),
        ],
        pivots: &["AR/VR", "Service Design", "Design Research", "Game Design"],
    },
    Track {
        field: "General",
        keywords: &[],
        milestones: [
            ("Choose a Direction", "You narrow your interests to a field you want to pursue. A short plan replaces vague ambitions."),
            ("First Professional Role", "You start a role that matches your interests. The first months are mostly learning."),
            ("Complete a Major Project", "You deliver a project that others depend on. Feedback from your manager is strong."),
            ("Expand Responsibilities", "You take on work beyond your original role. Colleagues start to rely on your judgment."),
            ("Build a Network", "You connect with mentors and peers across your field. Several conversations open new options."),
            ("Reach Your Two-Year Goal", "You reach the position you set out to earn. The next plan is already taking shape."),
        ],
        skills: &[
            ("Time Management", "You plan weeks around a few clear priorities. Deadlines stop piling up."),
            ("Communication", "You practice writing short, direct updates. Misunderstandings become rare."),
            ("Teamwork", "You learn to share credit and ask for help early. Projects run more smoothly."),
            ("Problem Solving", "You break large problems into testable pieces. Progress becomes visible."),
            ("Public Speaking", "You present to larger groups with less preparation. Nerves fade with practice."),
            ("Negotiation", "You prepare for conversations by knowing your alternatives. Outcomes improve for both sides."),
            ("Data Literacy", "You learn to read charts and question numbers. Decisions rest on evidence."),
            ("Self Reflection", "You keep a weekly journal of lessons learned. Patterns in your choices become clear."),
            ("Networking", "You follow up after every meeting. Relationships grow over time."),
        ],
        pivots: &["Entrepreneurship", "Teaching", "Consulting", "Public Service"],
    },
];

/// `{m}` is replaced with the round's milestone title.
const POSITIVE: &[(&str, &str)] = &[
    ("Mentor Steps In", "A senior colleague offers to mentor you while you work toward {m}. Regular check-ins keep you on track."),
    ("Unexpected Award", "Your recent work earns a small award connected to {m}. The recognition brings new contacts."),
    ("Strong Feedback", "An evaluation tied to {m} comes back glowing. You gain confidence in your approach."),
    ("Helpful Study Group", "You form a group with peers facing the same demands as {m}. Shared notes save you hours each week."),
    ("Funding Secured", "A scholarship covers costs related to {m}. Financial stress eases for the semester."),
    ("Breakthrough Idea", "During a walk an idea solves a problem blocking {m}. Progress speeds up noticeably."),
    ("Graduate Satisfied", "A past graduate tells you the path through {m} paid off. The story reassures you."),
];

const NEUTRAL: &[(&str, &str)] = &[
    (
        "Schedule Shuffle",
        "Plans around {m} are rearranged by your department. Nothing is lost, but routines change.",
    ),
    (
        "New Office",
        "Your desk moves to another building during {m}. The commute shifts by a few minutes.",
    ),
    (
        "Policy Update",
        "New rules affect paperwork for {m}. You spend an afternoon updating forms.",
    ),
    (
        "Team Reorganization",
        "People around you change roles while you pursue {m}. Your own work stays the same.",
    ),
    (
        "Conference Season",
        "Many colleagues travel while you focus on {m}. The office is quiet for weeks.",
    ),
    (
        "Tool Migration",
        "Your group adopts new software during {m}. Learning it takes time but changes little.",
    ),
];

const NEGATIVE: &[(&str, &str)] = &[
    (
        "Homesick",
        "You find it hard to adapt while pursuing {m}. Energy and focus drop for several weeks.",
    ),
    (
        "Rejected Application",
        "An application linked to {m} is turned down. You have to rethink your timeline.",
    ),
    (
        "Burnout Warning",
        "Long hours around {m} leave you exhausted. You are forced to slow down.",
    ),
    (
        "Project Setback",
        "A key result for {m} fails to replicate. Weeks of work need to be redone.",
    ),
    (
        "Funding Cut",
        "Support you counted on for {m} is withdrawn. You scramble to cover expenses.",
    ),
    (
        "Conflict with Collaborator",
        "A disagreement over credit strains work on {m}. Communication becomes tense.",
    ),
];

const HINTS: &[&str] = &[
    "whispers emerge",
    "fog lifts slowly",
    "unknown beckons",
    "silence speaks",
    "doors appear",
    "winds shift",
    "air thickens, energy wanes",
    "echoes from afar",
    "a lantern flickers",
    "footsteps in the mist",
    "tides turn quietly",
    "shadows lengthen",
    "a key glints",
    "roots reach deeper",
    "clouds gather overhead",
    "paths fork ahead",
    "embers still glow",
    "a letter arrives",
    "threads intertwine",
    "stars realign",
    "the bridge sways",
    "soft bells ring",
    "maps redraw themselves",
    "a hidden stair",
];

/// Offline provider. Output is a pure function of the request's seed, the
/// round index and the generation context.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateProvider;

impl TemplateProvider {
    pub fn new() -> Self {
        TemplateProvider
    }

    fn rng(seed: u64, round_index: u32, context_hash: u64) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(round_index.to_le_bytes());
        hasher.update(context_hash.to_le_bytes());
        ChaCha8Rng::from_seed(hasher.finalize().into())
    }

    fn track(profile: &UserProfile) -> &'static Track {
        let text = format!("{} {}", profile.intro, profile.goal).to_lowercase();
        let words: Vec<&str> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let hits = |t: &Track| {
            t.keywords
                .iter()
                .filter(|k| words.iter().any(|w| w.starts_with(**k)))
                .count()
        };
        TRACKS
            .iter()
            .enumerate()
            .max_by_key(|(i, t)| (hits(t), std::cmp::Reverse(*i)))
            .filter(|(_, t)| hits(t) > 0)
            .map_or(&TRACKS[3], |(_, t)| t)
    }

    /// 40% Positive, 25% Neutral, 25% Negative, 10% Change.
    fn draw_sentiment(rng: &mut ChaCha8Rng, allow_positive: bool) -> usize {
        if allow_positive {
            match rng.random_range(0..100) {
                0..40 => 0,
                40..65 => 1,
                65..90 => 2,
                _ => 3,
            }
        } else {
            match rng.random_range(0..60) {
                0..25 => 1,
                25..50 => 2,
                _ => 3,
            }
        }
    }

    pub fn round_json(seed: u64, ctx: &GenerationContext) -> String {
        let n = ctx.round_index;
        let mut rng = Self::rng(seed, n, ctx.hash64());
        let track = Self::track(&ctx.profile);
        let stage = (n.saturating_sub(1) as usize).min(track.milestones.len() - 1);
        let (m_title, m_body) = track.milestones[stage];

        let mut milestone_body = m_body.to_string();
        let last_milestone = ctx
            .pocketed_events
            .iter()
            .rev()
            .find(|e| e.category == EventCategory::Milestone);
        if let Some(prev) = last_milestone {
            milestone_body.push_str(&format!(" It builds directly on {}.", prev.title));
        }
        if let Some(change) = ctx.accepted_changes.last() {
            milestone_body.push_str(&format!(
                " Your move toward {} shapes every step.",
                change.to
            ));
        }
        if n as usize > track.milestones.len() {
            milestone_body.push_str(&format!(" This is stage {n} of the journey."));
        }

        let direction = ctx
            .accepted_changes
            .last()
            .map_or(track.field, |c| c.to.as_str());
        let mut sentiments = [0usize; 3];
        for i in 0..3 {
            let allow_positive = i < 2 || sentiments[..2] != [0, 0];
            sentiments[i] = Self::draw_sentiment(&mut rng, allow_positive);
        }

        let mut hints: Vec<&str> = HINTS.to_vec();
        hints.shuffle(&mut rng);
        let mut skills: Vec<&(&str, &str)> = track.skills.iter().collect();
        skills.shuffle(&mut rng);
        let mut pools = [POSITIVE.to_vec(), NEUTRAL.to_vec(), NEGATIVE.to_vec()];
        for pool in &mut pools {
            pool.shuffle(&mut rng);
        }
        let pivots: Vec<&str> = track
            .pivots
            .iter()
            .copied()
            .filter(|p| *p != direction)
            .collect();

        let mut out = Map::new();
        out.insert(
            format!("bigEvent{n}"),
            json!(format_event_string(m_title, &milestone_body, None)),
        );
        let mut used = [0usize; 3];
        for (k, &sentiment) in sentiments.iter().enumerate() {
            let (title, body, label) = if sentiment == 3 {
                let to = pivots[rng.random_range(0..pivots.len())];
                (
                    format!("Drawn Toward {to}"),
                    format!(
                        "While pursuing {m_title} you meet people working in {to}. Their projects make you question whether {direction} is still the right path."
                    ),
                    SentimentLabel::change(direction, to),
                )
            } else {
                let (title, body) = pools[sentiment][used[sentiment]];
                used[sentiment] += 1;
                let label = [
                    SentimentLabel::Positive,
                    SentimentLabel::Neutral,
                    SentimentLabel::Negative,
                ][sentiment]
                    .clone();
                (title.to_string(), body.replace("{m}", m_title), label)
            };
            out.insert(
                format!("randomEvent{n}-{}", k + 1),
                json!(format_event_string(&title, &body, Some(&label))),
            );
            out.insert(format!("randomEvent{n}-{}-hint", k + 1), json!(hints[k]));
        }
        for k in 0..3 {
            let (title, body) = skills[k];
            let body = format!("{body} It is essential for {m_title}.");
            out.insert(
                format!("skill{n}-{}", k + 1),
                json!(format_event_string(title, &body, None)),
            );
            out.insert(format!("skill{n}-{}-hint", k + 1), json!(hints[3 + k]));
        }
        serde_json::to_string_pretty(&Value::Object(out)).expect("map serializes")
    }

    pub fn report_json(profile: &UserProfile, summary: &JourneySummary) -> String {
        let (m, s, r) = (
            summary.milestones.len(),
            summary.skills.len(),
            summary.randoms.len(),
        );
        let track = Self::track(profile);
        let ending = match summary.completion_reason {
            CompletionReason::SixMilestones => {
                format!("You reached all six milestones in {} days, finishing ahead of the two-year limit.", summary.days_used)
            }
            CompletionReason::DaysExhausted => {
                format!(
                    "The two-year window closed after {} days with {m} of six milestones reached.",
                    summary.days_used
                )
            }
        };
        let last = summary
            .milestones
            .last()
            .map_or("your starting point".to_string(), |e| e.title.clone());
        let analysis = format!(
            "{ending} Along the way you collected {s} skills and lived through {r} unexpected events. Your furthest stage was {last}, in a journey centred on {}.",
            track.field
        );
        let mut steps: Vec<String> = summary
            .skills
            .iter()
            .take(3)
            .map(|e| format!("keep practising {}", e.title))
            .collect();
        steps.push("set one concrete goal for the next six months".into());
        steps.push("ask a mentor to review your plan".into());
        let suggestions = format!(
            "Next steps: {}. Revisit these each quarter and adjust as your direction evolves.",
            steps.join("; ")
        );
        serde_json::to_string_pretty(
            &json!({"careerAnalysis": analysis, "futureSuggestions": suggestions}),
        )
        .expect("report serializes")
    }
}

impl Provider for TemplateProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Template
    }

    fn submit(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        Ok(match &request.task {
            Task::Round { context } => Self::round_json(request.seed, context),
            Task::Report { profile, summary } => Self::report_json(profile, summary),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::career::DirectionChange;
    use crate::pipeline::tests_support::context;
    use crate::pipeline::{parse_round_response, validate_round};

    #[test]
    fn corpus_is_clean() {
        let banned = ["positive", "neutral", "negative", "change"];
        for hint in HINTS {
            let words = hint.split_whitespace().count();
            assert!((2..=5).contains(&words), "{hint}");
            assert!(!hint
                .split_whitespace()
                .any(|w| banned.iter().any(|b| w.to_lowercase().starts_with(b))));
        }
        for t in &TRACKS {
            assert!(t.skills.len() >= 3 && t.pivots.len() >= 2);
        }
        assert!(POSITIVE.len() >= 3 && NEUTRAL.len() >= 3 && NEGATIVE.len() >= 3);
    }

    #[test]
    fn track_follows_keywords() {
        let mut p = context(1).profile;
        assert_eq!(TemplateProvider::track(&p).field, "Research");
        p.intro = "I work as a software developer.".into();
        p.goal = "Become a staff engineer.".into();
        assert_eq!(TemplateProvider::track(&p).field, "Engineering");
        p.intro = "I like gardening.".into();
        p.goal = "Find something meaningful.".into();
        assert_eq!(TemplateProvider::track(&p).field, "General");
    }

    #[test]
    fn rounds_parse_and_validate_for_many_seeds() {
        for seed in 0..200 {
            for round in 1..=6 {
                let ctx = context(round);
                let raw = TemplateProvider::round_json(seed, &ctx);
                let bundle = parse_round_response(&raw, round).unwrap();
                let check = validate_round(&bundle);
                assert!(
                    check.is_clean(),
                    "seed {seed} round {round}: {:?}",
                    check.violations
                );
            }
        }
    }

    #[test]
    fn output_is_deterministic_and_context_sensitive() {
        let ctx = context(2);
        assert_eq!(
            TemplateProvider::round_json(7, &ctx),
            TemplateProvider::round_json(7, &ctx)
        );
        let mut changed = ctx.clone();
        changed.accepted_changes.push(DirectionChange {
            from: "Research".into(),
            to: "AR/VR".into(),
        });
        let a = TemplateProvider::round_json(7, &changed);
        assert_ne!(a, TemplateProvider::round_json(7, &ctx));
        assert!(a.contains("Your move toward AR/VR"));
    }

    #[test]
    fn change_labels_start_from_current_direction() {
        let mut found = false;
        for seed in 0..300 {
            let raw = TemplateProvider::round_json(seed, &context(1));
            let bundle = parse_round_response(&raw, 1).unwrap();
            for e in &bundle.randoms {
                if let Some(SentimentLabel::Change {
                    change_from,
                    change_to,
                }) = &e.label
                {
                    assert_eq!(change_from, "Research");
                    assert_ne!(change_to, "Research");
                    found = true;
                }
            }
        }
        assert!(found);
    }
}
