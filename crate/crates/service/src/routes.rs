use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use bookrec_core::corpus::{parse_rating, Bag, TokenizedBook};
use bookrec_core::recommender::{
    explain_feature, explain_recommendation, rank, FeatureExplanation, RankedList, RecommendationExplanation,
    DEFAULT_EXPLANATION_ROWS, DEFAULT_FEATURE_ROWS,
};
use bookrec_core::slot::{Slot, SlotMask};
use serde::Serialize;
use serde_json::Value;

use crate::error::{ApiError, ErrorCode};
use crate::session::{Session, Trained};

type ApiResult<T> = Result<Json<T>, ApiError>;
type Params = Query<HashMap<String, String>>;

pub const DEFAULT_PAGE_SIZE: usize = 20;
pub const MAX_PAGE_SIZE: usize = 200;
pub const DEFAULT_LIST_SIZE: usize = 10;

pub fn router(session: Arc<Session>) -> Router {
    Router::new()
        .route("/books", get(search_books))
        .route("/books/{id}", get(get_book))
        .route("/ratings", get(list_ratings).post(post_rating))
        .route("/train", post(train))
        .route("/recommendations", get(recommendations))
        .route("/bottom", get(bottom))
        .route("/explain/{id}", get(explain))
        .route("/explain-feature/{slot}/{token}", get(explain_token))
        .route("/status", get(status))
        .with_state(session)
}

fn param(params: &HashMap<String, String>, name: &str, default: usize) -> Result<usize, ApiError> {
    match params.get(name).map(|v| v.trim()) {
        None | Some("") => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_request(format!("query parameter `{name}` must be a non-negative integer"))),
    }
}

fn trained(session: &Session) -> Result<Arc<Trained>, ApiError> {
    session.current().ok_or_else(ApiError::untrained)
}

#[derive(Debug, Serialize)]
pub struct BookSummary {
    pub id: String,
    pub title: String,
    pub rating: Option<u8>,
}

#[derive(Debug, Serialize)]
pub struct BooksPage {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub books: Vec<BookSummary>,
}

fn summary(session: &Session, book: &TokenizedBook) -> BookSummary {
    BookSummary {
        id: book.id.clone(),
        title: book.title_display.clone(),
        rating: session.rating_of(&book.id).map(|r| r.get()),
    }
}

async fn search_books(State(session): State<Arc<Session>>, Query(params): Params) -> ApiResult<BooksPage> {
    let offset = param(&params, "offset", 0)?;
    let limit = param(&params, "limit", DEFAULT_PAGE_SIZE)?.min(MAX_PAGE_SIZE);
    let query = params.get("q").map_or("", |q| q.trim());
    let matches: Vec<&TokenizedBook> = if query.is_empty() {
        session.catalog().books().iter().collect()
    } else {
        session.catalog().search(query)
    };
    let books = matches.iter().skip(offset).take(limit).map(|b| summary(&session, b)).collect();
    Ok(Json(BooksPage { total: matches.len(), offset, limit, books }))
}

#[derive(Debug, Serialize)]
pub struct BookDetail {
    pub id: String,
    pub title: String,
    pub rating: Option<u8>,
    pub slots: BTreeMap<Slot, Bag>,
}

async fn get_book(State(session): State<Arc<Session>>, Path(id): Path<String>) -> ApiResult<BookDetail> {
    let book = session.catalog().get(&id).ok_or_else(|| ApiError::not_found(format!("book `{id}` not found")))?;
    Ok(Json(BookDetail {
        id: book.id.clone(),
        title: book.title_display.clone(),
        rating: session.rating_of(&id).map(|r| r.get()),
        slots: book.bags.clone(),
    }))
}

#[derive(Debug, Serialize)]
pub struct RatingAck {
    pub id: String,
    pub rating: u8,
    pub count: usize,
}

async fn post_rating(State(session): State<Arc<Session>>, body: Bytes) -> ApiResult<RatingAck> {
    let value: Value =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("body is not JSON: {e}")))?;
    let id = value
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("body must carry a string `id`"))?;
    let raw = value.get("rating").ok_or_else(|| ApiError::new(ErrorCode::InvalidRating, "missing `rating`"))?;
    let rating = parse_rating(raw).map_err(|e| ApiError::new(ErrorCode::InvalidRating, e.to_string()))?;
    let count = session.rate(id, rating)?;
    Ok(Json(RatingAck { id: id.to_string(), rating: rating.get(), count }))
}

#[derive(Debug, Serialize)]
pub struct RatingsList {
    pub count: usize,
    pub ratings: Vec<BookSummary>,
}

async fn list_ratings(State(session): State<Arc<Session>>) -> ApiResult<RatingsList> {
    let ratings: Vec<BookSummary> = session
        .ratings()
        .into_iter()
        .map(|e| BookSummary {
            title: session.catalog().get(&e.id).map_or_else(|| e.id.clone(), |b| b.title_display.clone()),
            id: e.id,
            rating: Some(e.rating.get()),
        })
        .collect();
    Ok(Json(RatingsList { count: ratings.len(), ratings }))
}

#[derive(Debug, Serialize)]
pub struct TrainAck {
    pub generation: u64,
    pub examples: usize,
}

async fn train(State(session): State<Arc<Session>>) -> ApiResult<TrainAck> {
    let trained = session.train().await?;
    Ok(Json(TrainAck { generation: trained.generation, examples: trained.examples.len() }))
}

#[derive(Debug, Serialize)]
pub struct RankedItem {
    pub rank: usize,
    pub id: String,
    pub title: String,
    /// Posterior log-odds; `null` when infinite.
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct RankedPage {
    pub generation: u64,
    pub entries: Vec<RankedItem>,
}

fn ranked_page(trained: &Trained, list: RankedList, ranks: impl Iterator<Item = usize>) -> RankedPage {
    let entries = list
        .entries
        .into_iter()
        .zip(ranks)
        .map(|(e, rank)| RankedItem { rank, id: e.id, title: e.title, score: e.score })
        .collect();
    RankedPage { generation: trained.generation, entries }
}

async fn recommendations(State(session): State<Arc<Session>>, Query(params): Params) -> ApiResult<RankedPage> {
    let n = param(&params, "n", DEFAULT_LIST_SIZE)?;
    let trained = trained(&session)?;
    let list = rank(&trained.profile, session.catalog(), &session.rated_ids()).top(n);
    Ok(Json(ranked_page(&trained, list, 1..)))
}

/// The lowest-ranked unrated books, worst first; `rank` counts from the
/// top of the full ranking.
async fn bottom(State(session): State<Arc<Session>>, Query(params): Params) -> ApiResult<RankedPage> {
    let n = param(&params, "n", DEFAULT_LIST_SIZE)?;
    let trained = trained(&session)?;
    let full = rank(&trained.profile, session.catalog(), &session.rated_ids());
    let total = full.len();
    Ok(Json(ranked_page(&trained, full.bottom(n), (1..=total).rev())))
}

#[derive(Debug, Serialize)]
pub struct ExplanationPage {
    pub generation: u64,
    #[serde(flatten)]
    pub explanation: RecommendationExplanation,
}

async fn explain(
    State(session): State<Arc<Session>>,
    Path(id): Path<String>,
    Query(params): Params,
) -> ApiResult<ExplanationPage> {
    let k = param(&params, "k", DEFAULT_EXPLANATION_ROWS)?;
    let trained = trained(&session)?;
    let book = session.catalog().get(&id).ok_or_else(|| ApiError::not_found(format!("book `{id}` not found")))?;
    let explanation = explain_recommendation(&trained.profile, book, k);
    Ok(Json(ExplanationPage { generation: trained.generation, explanation }))
}

#[derive(Debug, Serialize)]
pub struct FeaturePage {
    pub generation: u64,
    #[serde(flatten)]
    pub explanation: FeatureExplanation,
}

async fn explain_token(
    State(session): State<Arc<Session>>,
    Path((slot, token)): Path<(String, String)>,
    Query(params): Params,
) -> ApiResult<FeaturePage> {
    let k = param(&params, "k", DEFAULT_FEATURE_ROWS)?;
    let slot = Slot::from_str(&slot).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let trained = trained(&session)?;
    let explanation = explain_feature(&trained.profile, &trained.examples, slot, &token, k)?;
    Ok(Json(FeaturePage { generation: trained.generation, explanation }))
}

#[derive(Debug, Serialize)]
pub struct Status {
    pub generation: u64,
    pub trained: bool,
    pub ratings: usize,
    /// Ratings the served profile was trained on.
    pub profile_examples: usize,
    pub catalog: usize,
    pub lambda: f64,
    pub mask: SlotMask,
}

async fn status(State(session): State<Arc<Session>>) -> ApiResult<Status> {
    let current = session.current();
    Ok(Json(Status {
        generation: current.as_ref().map_or(0, |t| t.generation),
        trained: current.is_some(),
        ratings: session.ratings().len(),
        profile_examples: current.as_ref().map_or(0, |t| t.examples.len()),
        catalog: session.catalog().len(),
        lambda: session.config().lambda,
        mask: session.config().mask.clone(),
    }))
}
