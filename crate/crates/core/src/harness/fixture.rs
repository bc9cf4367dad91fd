//! Desk-scale synthetic QA corpus: templated town profiles whose questions
//! ask for person names, rivers, crops and so on. Every document carries
//! several person-valued facts, so answering requires matching the relation
//! words of the question against the document.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{parse_squad, CorpusError, QADataset, Split};

pub const TOWNS: &[&str] = &[
    "ashford", "bradford", "carlton", "dalton", "easton", "fairview", "glendale", "hampton", "kingsley",
    "langford", "milford", "newbury", "oakdale", "preston", "quincy", "redmond", "thornton", "upton",
    "wakefield", "weston", "ashland", "belmont", "clifton", "denton", "elmira", "fulton", "garland",
    "hartford", "irving", "jasper", "kendall", "lincoln", "marion", "norwood", "oxford", "pittsfield",
    "ramsey", "salem", "trenton", "vernon", "warren", "winslow", "albany", "bristol", "camden", "dover",
    "everett", "franklin", "greenville", "hudson", "lowell", "madison", "newport", "portland", "brighton",
    "sheldon", "tyler", "stratford", "bedford", "chester",
];

pub const REGIONS: &[&str] = &["north", "south", "east", "west", "hills", "valley", "coast", "plains", "mountains"];

pub const FIRST_NAMES: &[&str] = &[
    "anna", "bruce", "carol", "daniel", "edith", "frank", "grace", "harold", "irene", "james", "karen", "louis",
    "martha", "nathan", "olive", "peter", "rachel", "samuel", "teresa", "victor", "walter", "agnes", "bernard",
    "clara", "douglas", "eleanor", "felix", "gloria", "henry", "isaac", "julia", "kenneth", "lillian",
    "marcus", "nora", "oscar", "pauline", "raymond", "sylvia", "thomas",
];

pub const LAST_NAMES: &[&str] = &[
    "baker", "carter", "dawson", "ellis", "fisher", "garner", "harper", "jensen", "keller", "lawson", "mercer",
    "norton", "parker", "quinn", "reed", "sawyer", "turner", "vaughn", "walsh", "young", "abbott", "barnes",
    "coleman", "dixon", "emerson", "fletcher", "gibson", "hayes", "ingram", "jordan", "kirby", "lambert",
    "morgan", "nash", "owens", "palmer", "russell", "spencer", "tucker", "webb", "archer", "bishop", "cooper",
    "drake", "foster", "grant", "holmes", "mason", "porter", "warner",
];

pub const RIVERS: &[&str] = &[
    "arden", "bellamy", "calder", "shannon", "elwood", "fenwick", "garnet", "halsey", "ivory", "juniper",
    "humber", "linden", "marlow", "nettle", "osprey", "quarry", "rowan", "severn", "eden", "ulster",
    "wexford", "yarrow", "willow", "heron", "tweed", "avon", "thames", "ribble", "trent", "clyde",
];

pub const TEAMS: &[&str] = &[
    "eagles", "falcons", "hawks", "wolves", "bears", "lions", "tigers", "panthers", "rams", "bulls",
    "stallions", "badgers", "foxes", "owls", "ravens", "sharks", "dolphins", "jaguars", "cougars", "hornets",
    "wasps", "otters", "beavers", "vikings", "pirates", "rangers", "rockets", "comets", "giants", "knights",
];

pub const CROPS: &[&str] = &[
    "barley", "wheat", "oats", "corn", "rice", "cotton", "potatoes", "tomatoes", "onions", "carrots",
    "cabbage", "beans", "peas", "apples", "pears", "cherries", "grapes", "plums", "peaches", "lettuce",
];

pub const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
    "november", "december",
];

pub const FACTORIES: &[&str] = &[
    "glass", "steel", "paper", "textile", "furniture", "shoe", "cement", "soap", "candle", "chocolate",
    "bicycle", "clock", "pottery", "leather", "rubber",
];

pub const MATERIALS: &[&str] =
    &["granite", "marble", "limestone", "brick", "timber", "sandstone", "slate", "concrete", "oak", "pine"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AnswerKind {
    Person,
    River,
    Team,
    Crop,
    Month,
    Factory,
    Material,
}

struct Relation {
    kind: AnswerKind,
    /// `{S}` is the town, `{A}` the answer.
    fact: &'static str,
    question: &'static str,
}

const PERSON_RELATIONS: &[Relation] = &[
    Relation { kind: AnswerKind::Person, fact: "{S} was founded by {A} .", question: "Who founded {S} ?" },
    Relation { kind: AnswerKind::Person, fact: "The current mayor of {S} is {A} .", question: "Who is the current mayor of {S} ?" },
    Relation { kind: AnswerKind::Person, fact: "The old stone bridge was designed by {A} .", question: "Who designed the old stone bridge ?" },
    Relation { kind: AnswerKind::Person, fact: "The famous painter {A} was born here .", question: "Which famous painter was born in {S} ?" },
    Relation { kind: AnswerKind::Person, fact: "The public library is named after {A} .", question: "Who is the public library named after ?" },
    Relation { kind: AnswerKind::Person, fact: "The local newspaper is edited by {A} .", question: "Who edits the local newspaper ?" },
    Relation { kind: AnswerKind::Person, fact: "The first doctor in {S} was {A} .", question: "Who was the first doctor in {S} ?" },
    Relation { kind: AnswerKind::Person, fact: "The main hospital is run by {A} .", question: "Who runs the main hospital ?" },
];

const OTHER_RELATIONS: &[Relation] = &[
    Relation { kind: AnswerKind::River, fact: "The {A} river flows through the valley .", question: "Which river flows through the valley ?" },
    Relation { kind: AnswerKind::Team, fact: "The football club is known as the {A} .", question: "What is the football club known as ?" },
    Relation { kind: AnswerKind::Crop, fact: "Farmers near {S} mostly grow {A} .", question: "What do farmers near {S} mostly grow ?" },
    Relation { kind: AnswerKind::Month, fact: "The harvest festival is held every year in {A} .", question: "When is the harvest festival held ?" },
    Relation { kind: AnswerKind::Factory, fact: "The largest employer is a {A} factory .", question: "What kind of factory is the largest employer ?" },
    Relation { kind: AnswerKind::Material, fact: "The town hall was built from {A} .", question: "What was the town hall built from ?" },
];

const FILLERS: &[&str] = &[
    "The weather in {S} is usually mild .",
    "Many visitors come to {S} in the summer .",
    "The streets of {S} are narrow and quiet .",
    "A railway line connects {S} with the capital .",
    "Most houses in {S} have small gardens .",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub train_documents: usize,
    pub test_documents: usize,
    pub person_facts: usize,
    pub other_facts: usize,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self { train_documents: 400, test_documents: 100, person_facts: 4, other_facts: 2, seed: 7 }
    }
}

impl FixtureConfig {
    pub fn tiny(seed: u64) -> Self {
        Self { train_documents: 24, test_documents: 8, person_facts: 3, other_facts: 1, seed }
    }
}

/// Generated corpus: SQuAD-layout JSON for both splits, plus the parsed datasets.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub train_json: Vec<u8>,
    pub test_json: Vec<u8>,
    pub train: QADataset,
    pub test: QADataset,
}

/// Every word the generator can emit, lowercase.
pub fn vocabulary() -> Vec<String> {
    let mut words: Vec<String> = [TOWNS, REGIONS, FIRST_NAMES, LAST_NAMES, RIVERS, TEAMS, CROPS, MONTHS, FACTORIES, MATERIALS]
        .iter()
        .flat_map(|l| l.iter().map(|w| w.to_string()))
        .collect();
    let templates = PERSON_RELATIONS
        .iter()
        .chain(OTHER_RELATIONS)
        .flat_map(|r| [r.fact, r.question])
        .chain(FILLERS.iter().copied())
        .chain(["{S} is a small town in the {A} ."]);
    for t in templates {
        for w in t.split_whitespace() {
            if w.chars().all(char::is_alphabetic) {
                words.push(w.to_lowercase());
            }
        }
    }
    words.sort();
    words.dedup();
    words
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Appends `template` to `context` (space separated) and returns the char
/// offset of the `{A}` answer, if the template has one.
fn render(context: &mut String, template: &str, town: &str, answer: &str) -> Option<usize> {
    let mut answer_at = None;
    for (i, part) in template.split(' ').enumerate() {
        if !context.is_empty() {
            context.push(' ');
        }
        let word = match part {
            "{S}" => capitalize(town),
            "{A}" => {
                answer_at = Some(context.chars().count());
                answer.to_string()
            }
            w if i == 0 => capitalize(w),
            w => w.to_string(),
        };
        context.push_str(&word);
    }
    answer_at
}

fn render_question(template: &str, town: &str) -> String {
    template.replace("{S}", &capitalize(town))
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn answer_for(kind: AnswerKind, rng: &mut ChaCha8Rng, used: &mut Vec<String>) -> String {
    loop {
        let a = match kind {
            AnswerKind::Person => format!("{} {}", capitalize(pick(rng, FIRST_NAMES)), capitalize(pick(rng, LAST_NAMES))),
            AnswerKind::River => capitalize(pick(rng, RIVERS)),
            AnswerKind::Team => capitalize(pick(rng, TEAMS)),
            AnswerKind::Crop => pick(rng, CROPS).to_string(),
            AnswerKind::Month => capitalize(pick(rng, MONTHS)),
            AnswerKind::Factory => pick(rng, FACTORIES).to_string(),
            AnswerKind::Material => pick(rng, MATERIALS).to_string(),
        };
        // Answers never share a word within one document.
        let clash = a.split(' ').any(|w| used.iter().any(|u| u.eq_ignore_ascii_case(w)));
        if !clash {
            used.extend(a.split(' ').map(str::to_string));
            return a;
        }
    }
}

fn article(rng: &mut ChaCha8Rng, index: usize, split: &str, cfg: &FixtureConfig) -> serde_json::Value {
    let town = pick(rng, TOWNS);
    let region = pick(rng, REGIONS);
    let mut people: Vec<&Relation> = PERSON_RELATIONS.iter().collect();
    people.shuffle(rng);
    let mut others: Vec<&Relation> = OTHER_RELATIONS.iter().collect();
    others.shuffle(rng);
    let mut facts: Vec<&Relation> = people[..cfg.person_facts.min(people.len())]
        .iter()
        .chain(&others[..cfg.other_facts.min(others.len())])
        .copied()
        .collect();
    facts.shuffle(rng);

    let mut context = String::new();
    render(&mut context, "{S} is a small town in the {A} .", town, region);
    let filler_at = rng.gen_range(0..=facts.len());
    let filler = pick(rng, FILLERS);
    let mut used = vec![town.to_string(), region.to_string()];
    let mut qas = Vec::new();
    for (fi, rel) in facts.iter().enumerate() {
        if fi == filler_at {
            render(&mut context, filler, town, "");
        }
        let answer = answer_for(rel.kind, rng, &mut used);
        let start = render(&mut context, rel.fact, town, &answer).expect("facts carry an answer slot");
        qas.push(json!({
            "id": format!("{split}-{index:04}-{fi}"),
            "question": render_question(rel.question, town),
            "answers": [{"text": answer, "answer_start": start}],
        }));
    }
    if filler_at == facts.len() {
        render(&mut context, filler, town, "");
    }
    json!({
        "title": format!("{}_{index:04}", capitalize(town)),
        "paragraphs": [{"context": context, "qas": qas}],
    })
}

pub fn generate(cfg: &FixtureConfig) -> Result<Fixture, CorpusError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let train: Vec<_> = (0..cfg.train_documents).map(|i| article(&mut rng, i, "train", cfg)).collect();
    let test: Vec<_> = (0..cfg.test_documents).map(|i| article(&mut rng, i, "test", cfg)).collect();
    let train_json = serde_json::to_vec_pretty(&json!({"version": "1.1", "data": train})).expect("fixture serializes");
    let test_json = serde_json::to_vec_pretty(&json!({"version": "1.1", "data": test})).expect("fixture serializes");
    Ok(Fixture {
        train: parse_squad(&train_json, Split::Train)?,
        test: parse_squad(&test_json, Split::Test)?,
        train_json,
        test_json,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let a = generate(&FixtureConfig::tiny(3)).unwrap();
        let b = generate(&FixtureConfig::tiny(3)).unwrap();
        assert_eq!(a.train_json, b.train_json);
        assert_eq!(a.train.documents.len(), 24);
        assert_eq!(a.test.pairs.len(), 8 * 4);
        for ds in [&a.train, &a.test] {
            ds.validate().unwrap();
            for p in &ds.pairs {
                let doc = ds.document(&p.doc_id).unwrap();
                let (s, e) = p.answers[0].token_span;
                let span: Vec<&str> = doc.tokens[s..=e].iter().map(|t| t.text.as_str()).collect();
                assert_eq!(span.join(" "), p.answers[0].text);
            }
        }
    }

    #[test]
    fn default_size_is_desk_scale() {
        let f = generate(&FixtureConfig::default()).unwrap();
        assert_eq!(f.train.pairs.len() + f.test.pairs.len(), 500 * 6);
        assert!(f.train.token_count() + f.test.token_count() >= 20_000);
    }

    #[test]
    fn vocabulary_covers_generated_text() {
        let vocab = vocabulary();
        let f = generate(&FixtureConfig::tiny(11)).unwrap();
        for d in f.train.documents.iter().chain(&f.test.documents) {
            for t in &d.tokens {
                if t.text.chars().all(char::is_alphabetic) {
                    assert!(vocab.binary_search(&t.text.to_lowercase()).is_ok(), "{}", t.text);
                }
            }
        }
    }
}
