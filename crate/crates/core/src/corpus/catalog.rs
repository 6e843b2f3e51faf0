use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::slot::Slot;

use super::{words, StopwordList, TokenizedBook};

/// An immutable, id-indexed collection of tokenized books.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    books: Vec<TokenizedBook>,
    index: HashMap<String, usize>,
    /// Per-book search terms: title tokens, author tokens and author surnames.
    terms: Vec<BTreeSet<String>>,
}

impl Catalog {
    pub fn new(books: Vec<TokenizedBook>) -> Result<Self> {
        let mut index = HashMap::with_capacity(books.len());
        for (pos, book) in books.iter().enumerate() {
            if index.insert(book.id.clone(), pos).is_some() {
                return Err(Error::DuplicateId(book.id.clone()));
            }
        }
        let terms = books.iter().map(search_terms).collect();
        Ok(Self { books, index, terms })
    }

    pub fn books(&self) -> &[TokenizedBook] {
        &self.books
    }

    pub fn len(&self) -> usize {
        self.books.len()
    }

    pub fn is_empty(&self) -> bool {
        self.books.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TokenizedBook> {
        self.index.get(id).map(|&pos| &self.books[pos])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Books whose title or author tokens contain every query token, in
    /// catalog order. Stopwords in the query are ignored, and an author
    /// token such as `f_herbert` also matches its surname `herbert`.
    pub fn search(&self, query: &str) -> Vec<&TokenizedBook> {
        let stop = StopwordList::english_ref();
        let wanted: Vec<String> = words(query).filter(|w| !stop.contains(w)).collect();
        self.books
            .iter()
            .zip(&self.terms)
            .filter(|(_, terms)| wanted.iter().all(|w| terms.contains(w)))
            .map(|(book, _)| book)
            .collect()
    }
}

fn search_terms(book: &TokenizedBook) -> BTreeSet<String> {
    let mut terms: BTreeSet<String> = book.bag(Slot::Title).iter().map(|(t, _)| t.clone()).collect();
    terms.extend(words(&book.title_display));
    for (author, _) in book.bag(Slot::Authors).iter() {
        terms.insert(author.clone());
        terms.extend(words(author));
    }
    terms
}

/// Writes one JSON object per line.
pub fn write_catalog<W: Write>(mut out: W, books: &[TokenizedBook]) -> Result<()> {
    for book in books {
        serde_json::to_writer(&mut out, book)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_catalog<R: BufRead>(input: R) -> Result<Catalog> {
    let mut books = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let book: TokenizedBook =
            serde_json::from_str(&line).map_err(|source| Error::Json { line: idx + 1, source })?;
        books.push(book);
    }
    Catalog::new(books)
}
