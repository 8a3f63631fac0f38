from dataclasses import dataclass

from shapely.geometry import Polygon, mapping, shape

from RasterCore.raster import GeoTransform, Instance, InstanceSet
from config.exceptions import UnsupportedGeometryError, ValidationError
from config.logger import get_logger
from config.utils import read_json, write_json

logger = get_logger(__name__)

CRS_MEMBER = "crs_epsg"
GEOTRANSFORM_MEMBER = "geotransform"


@dataclass
class Annotation:
    """
    One expert-drawn crown.

    Attributes:
      polygon (shapely.geometry.Polygon): Crown outline in map units.
      centroid (tuple): (x, y) in map units; the polygon's area-weighted centroid when not annotated.
    """
    polygon: Polygon
    centroid: tuple


def _check_closed(rings, index):
    for ring in rings:
        if len(ring) < 4:
            raise ValidationError(f"Feature {index}: polygon ring needs at least 4 positions, got {len(ring)}")
        if list(ring[0]) != list(ring[-1]):
            raise ValidationError(f"Feature {index}: polygon ring is not closed")


def parse_annotations(collection, source="<geojson>"):
    """
    Parses a GeoJSON FeatureCollection of Polygon features into annotations.

    Parameters:
      collection (dict): Decoded GeoJSON.
      source (str): Name used in error messages.

    Returns:
      list of Annotation: In feature order.

    Raises:
      UnsupportedGeometryError: If a feature is not a Polygon.
      ValidationError: If a ring is unclosed or the document is not a FeatureCollection.
    """
    if not isinstance(collection, dict) or collection.get("type") != "FeatureCollection":
        raise ValidationError(f"{source}: expected a GeoJSON FeatureCollection")
    annotations = []
    for index, feature in enumerate(collection.get("features", [])):
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Polygon":
            raise UnsupportedGeometryError(
                f"{source}: feature {index} has geometry {geometry.get('type')!r}, only Polygon is supported")
        _check_closed(geometry.get("coordinates", []), index)
        polygon = shape(geometry)
        if polygon.is_empty or polygon.area <= 0:
            raise ValidationError(f"{source}: feature {index} has zero area")
        properties = feature.get("properties") or {}
        centroid = properties.get("centroid")
        if centroid is None:
            centroid = (polygon.centroid.x, polygon.centroid.y)
        elif len(centroid) != 2:
            raise ValidationError(f"{source}: feature {index} centroid must be [x, y]")
        annotations.append(Annotation(polygon=polygon, centroid=(float(centroid[0]), float(centroid[1]))))
    logger.debug("parsed %d annotations from %s", len(annotations), source)
    return annotations


def read_annotations(path):
    """
    Reads expert polygon annotations from a GeoJSON file.

    Parameters:
      path (str | Path): GeoJSON FeatureCollection of Polygon features in map units.

    Returns:
      list of Annotation: Polygons with their centroids.
    """
    return parse_annotations(read_json(path), source=str(path))


def write_annotations(annotations, path, crs_epsg=None):
    features = []
    for index, annotation in enumerate(annotations):
        features.append({
            "type": "Feature",
            "geometry": mapping(annotation.polygon),
            "properties": {"id": index + 1, "centroid": list(annotation.centroid)},
        })
    collection = {"type": "FeatureCollection", "features": features}
    if crs_epsg is not None:
        collection[CRS_MEMBER] = crs_epsg
    write_json(path, collection)


def instance_set_to_geojson(instance_set, crs_epsg=None, metadata=None):
    """
    Converts vectorised instances to a GeoJSON FeatureCollection.

    Parameters:
      instance_set (InstanceSet): Instances in map units.
      crs_epsg (int, optional): Carried as the "crs_epsg" foreign member.
      metadata (dict, optional): Run metadata stored under the "metadata" foreign member.

    Returns:
      dict: The FeatureCollection.
    """
    features = []
    for inst in instance_set:
        features.append({
            "type": "Feature",
            "geometry": mapping(inst.polygon),
            "properties": {
                "id": inst.id,
                "area_px": inst.area_px,
                "area_map": inst.area_map,
                "compactness": inst.compactness,
                "centroid_px": list(inst.centroid_px),
                "centroid_map": list(inst.centroid_map),
            },
        })
    collection = {"type": "FeatureCollection", "features": features,
                  GEOTRANSFORM_MEMBER: instance_set.geo.to_list()}
    if crs_epsg is not None:
        collection[CRS_MEMBER] = crs_epsg
    if metadata:
        collection["metadata"] = metadata
    return collection


def write_instance_set_geojson(instance_set, path, crs_epsg=None, metadata=None):
    write_json(path, instance_set_to_geojson(instance_set, crs_epsg=crs_epsg, metadata=metadata))


def read_instance_set_geojson(path):
    """
    Reads vectorised instances written by write_instance_set_geojson.

    Parameters:
      path (str | Path): GeoJSON FeatureCollection with instance properties.

    Returns:
      InstanceSet: Instances in feature order; the geotransform member is restored when present.
    """
    collection = read_json(path)
    if not isinstance(collection, dict) or collection.get("type") != "FeatureCollection":
        raise ValidationError(f"{path}: expected a GeoJSON FeatureCollection")
    instances = []
    for index, feature in enumerate(collection.get("features", [])):
        properties = feature.get("properties") or {}
        try:
            instances.append(Instance(
                id=int(properties["id"]),
                polygon=shape(feature["geometry"]),
                centroid_px=tuple(float(v) for v in properties["centroid_px"]),
                centroid_map=tuple(float(v) for v in properties["centroid_map"]),
                area_px=float(properties["area_px"]),
                area_map=float(properties["area_map"]),
                compactness=float(properties["compactness"]),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"{path}: feature {index} is not an instance record ({e})") from e
    geo = collection.get(GEOTRANSFORM_MEMBER)
    return InstanceSet(instances=instances, geo=GeoTransform.from_list(geo) if geo else GeoTransform())
