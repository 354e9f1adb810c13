use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::GeoError;
use crate::polygon::Polygon;

/// One parsed footprint: a polygon plus its feature properties.
/// MultiPolygon features are split into one `Feature` per part, all parts
/// sharing the same properties.
#[derive(Debug, Clone)]
pub struct Feature {
    pub polygon: Polygon,
    pub properties: Map<String, Value>,
}

impl Feature {
    /// The mandatory `id` property.
    pub fn id(&self) -> &str {
        self.properties
            .get("id")
            .and_then(Value::as_str)
            .expect("validated at parse time")
    }
}

/// Read the GeoJSON FeatureCollection subset: geometry types Polygon and
/// MultiPolygon only, and every feature must carry a string property `id`.
pub fn read_feature_collection(path: impl AsRef<Path>) -> Result<Vec<Feature>, GeoError> {
    let f = File::open(path.as_ref())?;
    let root: Value = serde_json::from_reader(BufReader::new(f))
        .map_err(|e| GeoError::parse(e.line(), format!("invalid JSON: {e}")))?;

    let obj = root
        .as_object()
        .ok_or_else(|| GeoError::parse(1, "root is not a JSON object"))?;
    if obj.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(GeoError::parse(1, "root type is not FeatureCollection"));
    }
    let features = obj
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| GeoError::parse(1, "missing features array"))?;

    let mut out = Vec::new();
    for (i, feat) in features.iter().enumerate() {
        let fobj = feat
            .as_object()
            .ok_or_else(|| GeoError::parse(1, format!("feature {i} is not an object")))?;
        let properties = match fobj.get("properties") {
            Some(Value::Object(m)) => m.clone(),
            Some(Value::Null) | None => Map::new(),
            Some(_) => {
                return Err(GeoError::parse(1, format!("feature {i}: properties not an object")))
            }
        };
        if !properties.get("id").map(|v| v.is_string()).unwrap_or(false) {
            return Err(GeoError::parse(
                1,
                format!("feature {i}: missing required string property \"id\""),
            ));
        }
        let geom = fobj
            .get("geometry")
            .and_then(Value::as_object)
            .ok_or_else(|| GeoError::parse(1, format!("feature {i}: missing geometry")))?;
        let gtype = geom
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| GeoError::parse(1, format!("feature {i}: geometry has no type")))?;
        let coords = geom
            .get("coordinates")
            .ok_or_else(|| GeoError::parse(1, format!("feature {i}: geometry has no coordinates")))?;

        match gtype {
            "Polygon" => {
                out.push(Feature {
                    polygon: parse_polygon(coords, i)?,
                    properties,
                });
            }
            "MultiPolygon" => {
                let parts = coords.as_array().ok_or_else(|| {
                    GeoError::parse(1, format!("feature {i}: MultiPolygon coordinates not an array"))
                })?;
                for part in parts {
                    out.push(Feature {
                        polygon: parse_polygon(part, i)?,
                        properties: properties.clone(),
                    });
                }
            }
            other => return Err(GeoError::UnsupportedGeometry(other.to_string())),
        }
    }
    Ok(out)
}

fn parse_polygon(coords: &Value, feature_idx: usize) -> Result<Polygon, GeoError> {
    let rings = coords.as_array().ok_or_else(|| {
        GeoError::parse(1, format!("feature {feature_idx}: Polygon coordinates not an array"))
    })?;
    if rings.is_empty() {
        return Err(GeoError::parse(1, format!("feature {feature_idx}: Polygon has no rings")));
    }
    let mut parsed: Vec<Vec<(f64, f64)>> = Vec::with_capacity(rings.len());
    for ring in rings {
        let pts = ring.as_array().ok_or_else(|| {
            GeoError::parse(1, format!("feature {feature_idx}: ring is not an array"))
        })?;
        let mut r = Vec::with_capacity(pts.len());
        for pt in pts {
            let pair = pt.as_array().filter(|p| p.len() >= 2).ok_or_else(|| {
                GeoError::parse(1, format!("feature {feature_idx}: position is not [x, y]"))
            })?;
            let x = pair[0].as_f64().ok_or_else(|| {
                GeoError::parse(1, format!("feature {feature_idx}: non-numeric coordinate"))
            })?;
            let y = pair[1].as_f64().ok_or_else(|| {
                GeoError::parse(1, format!("feature {feature_idx}: non-numeric coordinate"))
            })?;
            r.push((x, y));
        }
        parsed.push(r);
    }
    let exterior = parsed.remove(0);
    Polygon::new(exterior, parsed)
        .map_err(|e| GeoError::parse(1, format!("feature {feature_idx}: {e}")))
}

/// Write features back out as a FeatureCollection. Property maps serialize
/// with sorted keys, so output bytes are deterministic.
pub fn write_feature_collection(
    features: &[Feature],
    path: impl AsRef<Path>,
) -> Result<(), GeoError> {
    let feats: Vec<Value> = features
        .iter()
        .map(|f| {
            let mut rings: Vec<Value> = Vec::with_capacity(1 + f.polygon.interiors().len());
            rings.push(ring_to_json(f.polygon.exterior()));
            for hole in f.polygon.interiors() {
                rings.push(ring_to_json(hole));
            }
            json!({
                "type": "Feature",
                "properties": Value::Object(f.properties.clone()),
                "geometry": { "type": "Polygon", "coordinates": Value::Array(rings) },
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": Value::Array(feats) });
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &doc).map_err(|e| GeoError::parse(0, e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn ring_to_json(ring: &[(f64, f64)]) -> Value {
    Value::Array(ring.iter().map(|&(x, y)| json!([x, y])).collect())
}
