use serde::{Deserialize, Serialize};

use super::{covering_span, tokenize, AnswerRef, CorpusError, Document, QADataset, QAPair, Split};

#[derive(Debug, Serialize, Deserialize)]
struct SquadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    data: Vec<SquadArticle>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadArticle {
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    answers: Vec<SquadAnswer>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: usize,
}

fn doc_id(article: usize, paragraph: usize) -> String {
    format!("a{article}p{paragraph}")
}

/// Parses the SQuAD v1.1 article/paragraph/qas layout.
pub fn parse_squad(raw: &[u8], split: Split) -> Result<QADataset, CorpusError> {
    let file: SquadFile =
        serde_json::from_slice(raw).map_err(|e| CorpusError::MalformedInput(e.to_string()))?;

    let mut documents = Vec::new();
    let mut pairs = Vec::new();
    for (ai, article) in file.data.into_iter().enumerate() {
        for (pi, para) in article.paragraphs.into_iter().enumerate() {
            let id = doc_id(ai, pi);
            let tokens = tokenize(&para.context);
            let context_len = para.context.chars().count();
            for qa in para.qas {
                if qa.answers.is_empty() {
                    return Err(CorpusError::MalformedInput(format!("question {} has no answers", qa.id)));
                }
                let mut answers = Vec::with_capacity(qa.answers.len());
                for ans in qa.answers {
                    let len = ans.text.chars().count();
                    if ans.answer_start + len > context_len {
                        return Err(CorpusError::OffsetOutOfRange {
                            question_id: qa.id.clone(),
                            answer_start: ans.answer_start,
                            answer_len: len,
                            context_len,
                        });
                    }
                    let span = covering_span(&tokens, ans.answer_start, ans.answer_start + len)
                        .ok_or_else(|| {
                            CorpusError::MalformedInput(format!(
                                "answer {:?} of question {} covers no token",
                                ans.text, qa.id
                            ))
                        })?;
                    answers.push(AnswerRef { text: ans.text, char_start: ans.answer_start, token_span: span });
                }
                pairs.push(QAPair {
                    id: qa.id,
                    doc_id: id.clone(),
                    question_tokens: tokenize(&qa.question),
                    question: qa.question,
                    answers,
                });
            }
            documents.push(Document {
                id,
                title: article.title.clone(),
                article_index: ai,
                text: para.context,
                tokens,
            });
        }
    }
    Ok(QADataset { split, documents, pairs })
}

pub(super) fn to_squad(dataset: &QADataset) -> Vec<u8> {
    let mut data: Vec<SquadArticle> = Vec::new();
    let mut current: Option<usize> = None;
    for doc in &dataset.documents {
        if current != Some(doc.article_index) {
            data.push(SquadArticle { title: doc.title.clone(), paragraphs: Vec::new() });
            current = Some(doc.article_index);
        }
        let qas = dataset
            .pairs
            .iter()
            .filter(|p| p.doc_id == doc.id)
            .map(|p| SquadQa {
                id: p.id.clone(),
                question: p.question.clone(),
                answers: p
                    .answers
                    .iter()
                    .map(|a| SquadAnswer { text: a.text.clone(), answer_start: a.char_start })
                    .collect(),
            })
            .collect();
        data.last_mut()
            .expect("article pushed above")
            .paragraphs
            .push(SquadParagraph { context: doc.text.clone(), qas });
    }
    let file = SquadFile { version: Some("1.1".into()), data };
    serde_json::to_vec_pretty(&file).expect("squad layout serializes")
}
