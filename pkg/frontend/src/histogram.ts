import type { HistogramResponse } from "./api.js";
import { escapeHtml, formatTimestamp } from "./fmt.js";

const PALETTE = ["#58a6ff", "#f78166", "#3fb950", "#d2a8ff", "#ffd43b", "#76e3ea"];
const MARGIN = { top: 6, right: 4, bottom: 16, left: 4 };

export interface BarSegment {
  bucket: number; // index into counts/starts
  series: string | null; // null when the payload has no split series
  count: number; // verbatim payload count for this segment
  x: number;
  y: number;
  w: number;
  h: number;
  color: string;
}

export interface HistogramView {
  width: number;
  height: number;
  total: number; // payload total, untouched
  bucketWidthS: number;
  starts: number[]; // payload bucket starts, epoch microseconds
  counts: number[]; // payload bucket counts, untouched
  seriesNames: string[]; // payload series keys, sorted for stable colors
  segments: BarSegment[];
  svg: string;
}

export function seriesColor(index: number): string {
  return PALETTE[index % PALETTE.length] as string;
}

/**
 * Lay out one stacked bar per payload bucket. Only pixel geometry is
 * computed here; every count in the view is copied from the payload.
 */
export function buildHistogramView(payload: HistogramResponse, width = 720, height = 180): HistogramView {
  const starts = payload.buckets.map((b) => b.start);
  const counts = payload.buckets.map((b) => b.count);
  const seriesNames = payload.series ? Object.keys(payload.series).sort() : [];

  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;
  const peak = Math.max(1, ...counts);
  const slot = counts.length > 0 ? innerW / counts.length : innerW;
  const barW = Math.max(1, slot - Math.min(2, slot / 4));
  const scale = (count: number) => (count / peak) * innerH;

  const segments: BarSegment[] = [];
  for (let i = 0; i < counts.length; i++) {
    const x = MARGIN.left + i * slot;
    const baseline = MARGIN.top + innerH;
    if (seriesNames.length === 0) {
      const count = counts[i] as number;
      if (count > 0) {
        const h = scale(count);
        segments.push({
          bucket: i,
          series: null,
          count,
          x,
          y: baseline - h,
          w: barW,
          h,
          color: seriesColor(0),
        });
      }
      continue;
    }
    let stackTop = baseline;
    seriesNames.forEach((name, si) => {
      const count = payload.series?.[name]?.[i] ?? 0;
      if (count === 0) return;
      const h = scale(count);
      stackTop -= h;
      segments.push({
        bucket: i,
        series: name,
        count,
        x,
        y: stackTop,
        w: barW,
        h,
        color: seriesColor(si),
      });
    });
  }

  return {
    width,
    height,
    total: payload.total,
    bucketWidthS: payload.bucket_width_s,
    starts,
    counts,
    seriesNames,
    segments,
    svg: drawSvg(width, height, starts, segments),
  };
}

function drawSvg(width: number, height: number, starts: number[], segments: BarSegment[]): string {
  const parts: string[] = [
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" ` +
      'xmlns="http://www.w3.org/2000/svg" role="img">',
  ];
  const axisY = height - MARGIN.bottom;
  parts.push(
    `<line x1="0" y1="${axisY}" x2="${width}" y2="${axisY}" stroke="#30363d" stroke-width="1"/>`,
  );
  for (const seg of segments) {
    const label =
      (seg.series === null ? "" : `${seg.series}: `) +
      `${seg.count} @ ${formatTimestamp(starts[seg.bucket] as number)}`;
    parts.push(
      `<rect x="${round2(seg.x)}" y="${round2(seg.y)}" width="${round2(seg.w)}" ` +
        `height="${round2(seg.h)}" fill="${seg.color}">` +
        `<title>${escapeHtml(label)}</title></rect>`,
    );
  }
  if (starts.length > 0) {
    const first = formatTimestamp(starts[0] as number);
    const last = formatTimestamp(starts[starts.length - 1] as number);
    parts.push(
      `<text x="${MARGIN.left}" y="${height - 4}" class="axis">${escapeHtml(first)}</text>`,
    );
    if (starts.length > 1) {
      parts.push(
        `<text x="${width - MARGIN.right}" y="${height - 4}" text-anchor="end" class="axis">` +
          `${escapeHtml(last)}</text>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}

function round2(n: number): number {
  return Math.round(n * 100) / 100;
}
