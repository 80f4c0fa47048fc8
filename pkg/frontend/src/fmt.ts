export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Epoch microseconds to a compact UTC timestamp with millisecond detail. */
export function formatTimestamp(us: number): string {
  const iso = new Date(Math.floor(us / 1000)).toISOString();
  return iso.replace("T", " ").replace("Z", "");
}
