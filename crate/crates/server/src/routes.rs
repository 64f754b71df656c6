use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query as UrlQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ndc_search::{DataPointer, Database, Query, Schema};
use serde::Serialize;
use serde_json::{Map, Value};
use tower_http::services::ServeDir;

use crate::config::ApiConfig;
use crate::error::{ApiError, ErrorKind};

/// Upper bound on `limit` accepted by `/search`.
pub const MAX_LIMIT: usize = 1000;

#[derive(Clone)]
pub struct AppState {
    pub db: Arc<Database>,
    pub config: Arc<ApiConfig>,
}

pub fn router(state: AppState) -> Router {
    let ui_dir = state.config.ui_dir.clone();
    let api = Router::new()
        .route("/tables/{name}/records", post(insert))
        .route(
            "/tables/{name}/records/{p_value}",
            get(retrieve).put(update).delete(remove),
        )
        .route("/search", get(search));
    let app = match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index_page)),
    };
    app.with_state(state)
}

/// One row of the ranked result table.
#[derive(Debug, Serialize)]
pub struct SearchRow {
    pub serial_no: usize,
    pub matched_info: String,
    pub matched_percent: u8,
    pub pointer: DataPointer,
}

fn authorize(state: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let Some(token) = state.config.api_token.as_deref() else {
        return Ok(());
    };
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match given {
        Some(t) if t.as_bytes() == token.as_bytes() => Ok(()),
        Some(_) => Err(ApiError::new(ErrorKind::Auth, "invalid token")),
        None => Err(ApiError::new(ErrorKind::Auth, "missing bearer token")),
    }
}

fn schema(state: &AppState, name: &str) -> Result<Schema, ApiError> {
    state
        .db
        .table(name)
        .map(|(_, schema)| schema)
        .ok_or_else(|| ApiError::not_found(format!("unknown table {name:?}")))
}

fn pointer(state: &AppState, name: &str, raw: &str) -> Result<(DataPointer, Schema), ApiError> {
    let schema = schema(state, name)?;
    let p_value = raw
        .parse::<u64>()
        .map_err(|_| ApiError::validation(format!("p_value {raw:?} is not a non-negative integer")))?;
    Ok((DataPointer::new(schema.table_id, p_value), schema))
}

/// Field values from a JSON array in schema order or an object keyed by
/// field name.
fn field_values(schema: &Schema, body: &[u8]) -> Result<Vec<String>, ApiError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::validation(format!("invalid JSON body: {e}")))?;
    let as_string = |field: &str, v: &Value| match v {
        Value::String(s) => Ok(s.clone()),
        _ => Err(ApiError::validation(format!("field {field:?} must be a string"))),
    };
    let values = match value {
        Value::Array(items) => {
            if items.len() != schema.arity() {
                return Err(ApiError::validation(format!(
                    "expected {} field values, got {}",
                    schema.arity(),
                    items.len()
                ))
                .with_code("arity"));
            }
            schema
                .field_names
                .iter()
                .zip(&items)
                .map(|(f, v)| as_string(f, v))
                .collect::<Result<_, _>>()?
        }
        Value::Object(mut obj) => {
            let values = schema
                .field_names
                .iter()
                .map(|f| match obj.remove(f) {
                    Some(v) => as_string(f, &v),
                    None => Err(ApiError::validation(format!("missing field {f:?}")).with_code("arity")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(extra) = obj.keys().next() {
                return Err(ApiError::validation(format!("unknown field {extra:?}")).with_code("arity"));
            }
            values
        }
        _ => {
            return Err(ApiError::validation(
                "body must be an array of field values or an object keyed by field name",
            ))
        }
    };
    Ok(values)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorKind::Internal, e.to_string()))?
}

async fn insert(
    State(state): State<AppState>,
    Path(name): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    authorize(&state, &headers)?;
    let schema = schema(&state, &name)?;
    let values = field_values(&schema, &body)?;
    let db = state.db.clone();
    let p = blocking(move || Ok(db.insert(&name, values)?)).await?;
    Ok((StatusCode::CREATED, Json(p)).into_response())
}

async fn retrieve(
    State(state): State<AppState>,
    Path((name, raw)): Path<(String, String)>,
) -> Result<Json<Map<String, Value>>, ApiError> {
    let (p, schema) = pointer(&state, &name, &raw)?;
    let record = state
        .db
        .get(p)
        .ok_or_else(|| ApiError::not_found(format!("no record at {p}")))?;
    let obj = schema
        .field_names
        .iter()
        .zip(&record.fields)
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    Ok(Json(obj))
}

async fn update(
    State(state): State<AppState>,
    Path((name, raw)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<DataPointer>, ApiError> {
    authorize(&state, &headers)?;
    let (p, schema) = pointer(&state, &name, &raw)?;
    let values = field_values(&schema, &body)?;
    let db = state.db.clone();
    blocking(move || Ok(db.update(p, values)?)).await?;
    Ok(Json(p))
}

async fn remove(
    State(state): State<AppState>,
    Path((name, raw)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<StatusCode, ApiError> {
    authorize(&state, &headers)?;
    let (p, _) = pointer(&state, &name, &raw)?;
    let db = state.db.clone();
    blocking(move || Ok(db.delete(p)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

fn parse_param<T: std::str::FromStr>(
    params: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, ApiError> {
    params
        .get(key)
        .map(|raw| {
            raw.parse()
                .map_err(|_| ApiError::validation(format!("invalid {key} {raw:?}")))
        })
        .transpose()
}

async fn search(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlQuery(params): UrlQuery<HashMap<String, String>>,
) -> Result<Json<Vec<SearchRow>>, ApiError> {
    if state.config.search_requires_auth {
        authorize(&state, &headers)?;
    }
    let text = params
        .get("q")
        .ok_or_else(|| ApiError::validation("missing query parameter q"))?;
    let limit = parse_param::<usize>(&params, "limit")?.unwrap_or(state.config.default_limit);
    if !(1..=MAX_LIMIT).contains(&limit) {
        return Err(ApiError::validation(format!("limit must be between 1 and {MAX_LIMIT}")));
    }
    let min_score = parse_param::<u8>(&params, "min_score")?.unwrap_or(0);
    if min_score > 100 {
        return Err(ApiError::validation("min_score must be between 0 and 100"));
    }

    let query = Query::new(text.as_str()).with_limit(limit).with_min_score(min_score);
    if !query.has_terms() {
        return Err(ApiError::no_searchable_terms());
    }
    let rows = state
        .db
        .search(&query)
        .hits
        .into_iter()
        .enumerate()
        .map(|(i, h)| SearchRow {
            serial_no: i + 1,
            matched_info: h.matched_record.fields.join(", "),
            matched_percent: h.score_percent,
            pointer: h.pointer,
        })
        .collect();
    Ok(Json(rows))
}

async fn index_page() -> Html<&'static str> {
    Html(INDEX_HTML)
}

const INDEX_HTML: &str = r#"<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Citizen search</title>
<style>
body { font-family: sans-serif; margin: 2rem; }
table { border-collapse: collapse; margin-top: 1rem; }
td, th { border: 1px solid #ccc; padding: 4px 8px; text-align: left; }
</style>
</head>
<body>
<h1>Citizen search</h1>
<form id="f"><input id="q" size="40" autofocus placeholder="name, place, ..."> <button>Search</button></form>
<table id="r" hidden>
<thead><tr><th>Serial No</th><th>Matched Info</th><th>Matched (%)</th><th>More Info</th></tr></thead>
<tbody></tbody>
</table>
<p id="msg"></p>
<script>
const f = document.getElementById('f'), tbody = document.querySelector('#r tbody');
f.onsubmit = async (e) => {
  e.preventDefault();
  const res = await fetch('/search?q=' + encodeURIComponent(document.getElementById('q').value));
  const body = await res.json();
  tbody.innerHTML = '';
  document.getElementById('msg').textContent = res.ok ? (body.length ? '' : 'No matches.') : body.message;
  document.getElementById('r').hidden = !res.ok || !body.length;
  if (!res.ok) return;
  for (const row of body) {
    const tr = document.createElement('tr');
    const link = '/tables/citizen/records/' + row.pointer.p_value;
    for (const v of [row.serial_no, row.matched_info, row.matched_percent]) {
      const td = document.createElement('td'); td.textContent = v; tr.appendChild(td);
    }
    const td = document.createElement('td'), a = document.createElement('a');
    a.href = link; a.textContent = 'More Info'; td.appendChild(a); tr.appendChild(td);
    tbody.appendChild(tr);
  }
};
</script>
</body>
</html>
"#;
