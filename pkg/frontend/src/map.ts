import type { BlockProperties, FeatureCollection, Geometry, ZoneProperties } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

// Categorical palette for zone fills, assigned by sorted school id. Twelve
// hues cover every fixture; indexes wrap beyond that.
export const ZONE_PALETTE = [
  "#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2",
  "#eeca3b", "#9d755d", "#888888", "#6a3d9a", "#1b9e77", "#d95f02",
];

export function zoneColor(schoolId: string, schoolIds: string[]): string {
  const index = schoolIds.indexOf(schoolId);
  const at = index >= 0 ? index : schoolIds.length;
  return ZONE_PALETTE[at % ZONE_PALETTE.length]!;
}

/**
 * Fixed sequential scale for the White student share: 0 maps to near-white,
 * 1 to a dark blue, so a darker block always means a higher share no matter
 * which district or scenario is on screen. Blocks with no students are gray.
 */
export function whiteShareColor(share: number | null): string {
  if (share === null || !Number.isFinite(share)) return "#d9d9d9";
  const t = Math.min(1, Math.max(0, share));
  const from = { r: 0xf7, g: 0xfb, b: 0xff };
  const to = { r: 0x08, g: 0x30, b: 0x6b };
  const channel = (a: number, b: number) => Math.round(a + (b - a) * t);
  const hex = (v: number) => v.toString(16).padStart(2, "0");
  return `#${hex(channel(from.r, to.r))}${hex(channel(from.g, to.g))}${hex(channel(from.b, to.b))}`;
}

export interface Projection {
  (lon: number, lat: number): [number, number];
  width: number;
  height: number;
}

function eachPosition(geometry: Geometry, visit: (lon: number, lat: number) => void): void {
  const polygons = geometry.type === "Polygon" ? [geometry.coordinates] : geometry.coordinates;
  for (const polygon of polygons) {
    for (const ring of polygon) {
      for (const position of ring) {
        visit(position[0]!, position[1]!);
      }
    }
  }
}

/**
 * Fit every feature's bounding box into a width x height viewport, preserving
 * aspect ratio and flipping latitude (SVG y grows downward).
 */
export function fitProjection(
  collections: FeatureCollection<unknown>[],
  width = 480,
  height = 360,
  padding = 8,
): Projection {
  let minLon = Infinity, minLat = Infinity, maxLon = -Infinity, maxLat = -Infinity;
  for (const fc of collections) {
    for (const feature of fc.features) {
      eachPosition(feature.geometry, (lon, lat) => {
        if (lon < minLon) minLon = lon;
        if (lon > maxLon) maxLon = lon;
        if (lat < minLat) minLat = lat;
        if (lat > maxLat) maxLat = lat;
      });
    }
  }
  if (!Number.isFinite(minLon)) {
    minLon = minLat = 0;
    maxLon = maxLat = 1;
  }
  const spanLon = maxLon - minLon || 1e-9;
  const spanLat = maxLat - minLat || 1e-9;
  const scale = Math.min((width - 2 * padding) / spanLon, (height - 2 * padding) / spanLat);
  const offsetX = (width - spanLon * scale) / 2;
  const offsetY = (height - spanLat * scale) / 2;

  const project = ((lon: number, lat: number): [number, number] => [
    offsetX + (lon - minLon) * scale,
    height - offsetY - (lat - minLat) * scale,
  ]) as Projection;
  project.width = width;
  project.height = height;
  return project;
}

export function geometryPath(geometry: Geometry, project: Projection): string {
  const polygons = geometry.type === "Polygon" ? [geometry.coordinates] : geometry.coordinates;
  const parts: string[] = [];
  for (const polygon of polygons) {
    for (const ring of polygon) {
      ring.forEach((position, i) => {
        const [x, y] = project(position[0]!, position[1]!);
        parts.push(`${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`);
      });
      parts.push("Z");
    }
  }
  return parts.join("");
}

export type ShadeMode = "zone" | "white_share";

export interface MapLayers {
  blocks: FeatureCollection<BlockProperties>;
  zones: FeatureCollection<ZoneProperties>;
  schoolIds: string[];
  shade: ShadeMode;
  title: string;
}

/** Build one SVG choropleth: shaded blocks underneath, zone outlines on top. */
export function renderMap(doc: Document, layers: MapLayers, project?: Projection): SVGSVGElement {
  const proj = project ?? fitProjection([layers.blocks, layers.zones]);
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${proj.width} ${proj.height}`);
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", layers.title);

  const blockLayer = doc.createElementNS(SVG_NS, "g");
  blockLayer.setAttribute("class", "blocks");
  for (const feature of layers.blocks.features) {
    const props = feature.properties;
    const path = doc.createElementNS(SVG_NS, "path");
    path.setAttribute("d", geometryPath(feature.geometry, proj));
    path.setAttribute(
      "fill",
      layers.shade === "zone"
        ? zoneColor(props.school_id, layers.schoolIds)
        : whiteShareColor(props.white_share),
    );
    path.setAttribute("data-block", props.block_id);
    path.setAttribute("data-school", props.school_id);
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = `${props.block_id}: ${props.students_total} students, school ${props.school_id}`;
    path.appendChild(title);
    blockLayer.appendChild(path);
  }
  svg.appendChild(blockLayer);

  const zoneLayer = doc.createElementNS(SVG_NS, "g");
  zoneLayer.setAttribute("class", "zones");
  for (const feature of layers.zones.features) {
    const outline = doc.createElementNS(SVG_NS, "path");
    outline.setAttribute("d", geometryPath(feature.geometry, proj));
    outline.setAttribute("fill", "none");
    outline.setAttribute("stroke", zoneColor(feature.properties.school_id, layers.schoolIds));
    outline.setAttribute("stroke-width", "2");
    outline.setAttribute("data-zone", feature.properties.school_id);
    zoneLayer.appendChild(outline);
  }
  svg.appendChild(zoneLayer);
  return svg;
}
