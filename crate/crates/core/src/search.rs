//! Inverted index over article titles, author names and journal titles.
//! Abstracts are never indexed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ingest::PivotSummary;
use crate::model::ArticleKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub article: ArticleKey,
    pub journal_title: String,
    pub title: String,
    pub authors: Vec<String>,
    pub score: u32,
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone)]
struct Doc {
    key: ArticleKey,
    journal_title: String,
    title: String,
    authors: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SearchIndex {
    docs: Vec<Doc>,
    // token -> (doc, occurrences), docs ascending
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl SearchIndex {
    pub fn build<'a>(summaries: impl IntoIterator<Item = &'a PivotSummary>) -> Self {
        let mut index = SearchIndex::default();
        for s in summaries {
            let Ok(key) = s.key() else { continue };
            for a in &s.articles {
                let doc = index.docs.len() as u32;
                let mut counts: HashMap<String, u32> = HashMap::new();
                let fields = std::iter::once(a.title.as_str())
                    .chain(a.authors.iter().map(String::as_str))
                    .chain(std::iter::once(s.journal_title.as_str()));
                for token in fields.flat_map(tokenize) {
                    *counts.entry(token).or_default() += 1;
                }
                for (token, n) in counts {
                    index.postings.entry(token).or_default().push((doc, n));
                }
                index.docs.push(Doc {
                    key: key.article(a.seq),
                    journal_title: s.journal_title.clone(),
                    title: a.title.clone(),
                    authors: a.authors.clone(),
                });
            }
        }
        index
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Conjunctive match over all distinct query tokens. Score is the total
    /// occurrence count of the query tokens; ties break on article key.
    pub fn search(&self, query: &str) -> Vec<SearchHit> {
        let mut tokens: Vec<String> = tokenize(query).collect();
        tokens.sort();
        tokens.dedup();
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut lists = Vec::with_capacity(tokens.len());
        for t in &tokens {
            match self.postings.get(t) {
                Some(list) => lists.push(list),
                None => return Vec::new(),
            }
        }
        lists.sort_by_key(|l| l.len());
        let (first, rest) = lists.split_first().expect("non-empty");
        let mut hits: Vec<SearchHit> = first
            .iter()
            .filter_map(|&(doc, n)| {
                let mut score = n;
                for list in rest {
                    let pos = list.binary_search_by_key(&doc, |&(d, _)| d).ok()?;
                    score += list[pos].1;
                }
                let d = &self.docs[doc as usize];
                Some(SearchHit {
                    article: d.key.clone(),
                    journal_title: d.journal_title.clone(),
                    title: d.title.clone(),
                    authors: d.authors.clone(),
                    score,
                })
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .cmp(&a.score)
                .then_with(|| a.article.cmp(&b.article))
        });
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ArticleRef;
    use chrono::{NaiveDate, Utc};

    fn corpus() -> Vec<PivotSummary> {
        let art = |seq, title: &str, authors: &[&str], abs: &str| ArticleRef {
            seq,
            title: title.into(),
            authors: authors.iter().map(|a| a.to_string()).collect(),
            first_page: seq,
            last_page: seq,
            abstract_text: Some(abs.into()),
        };
        vec![PivotSummary {
            issn: "0000-0019".into(),
            journal_title: "Journal of Networks".into(),
            volume: 1,
            issue: 1,
            cover_date: NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
            provider: "p".into(),
            arrival: Utc::now(),
            articles: vec![
                art(1, "Routing in sparse graphs", &["Smith, J."], "zebra"),
                art(2, "Congestion routing, routing again", &["Lee"], ""),
                art(3, "Queueing", &["Smithson"], "routing"),
            ],
        }]
    }

    #[test]
    fn conjunctive_match() {
        let idx = SearchIndex::build(&corpus());
        let hits = idx.search("smith routing");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].title, "Routing in sparse graphs");
    }

    #[test]
    fn abstracts_not_indexed() {
        let idx = SearchIndex::build(&corpus());
        assert!(idx.search("zebra").is_empty());
        assert_eq!(idx.search("routing").len(), 2);
    }

    #[test]
    fn empty_and_punctuation_queries() {
        let idx = SearchIndex::build(&corpus());
        assert!(idx.search("").is_empty());
        assert!(idx.search("  ,;- ").is_empty());
    }

    #[test]
    fn ranking_by_token_count_then_key() {
        let idx = SearchIndex::build(&corpus());
        let hits = idx.search("ROUTING");
        assert_eq!(hits[0].article.seq, 2);
        assert_eq!(hits[0].score, 2);
        assert_eq!(hits[1].score, 1);
        let journal = idx.search("networks");
        assert_eq!(
            journal.iter().map(|h| h.article.seq).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }
}
