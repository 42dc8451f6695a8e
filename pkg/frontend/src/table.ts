// What-if results table.  The server pre-formats every cell (means on one
// row, bracketed standard deviations beneath, the ANOVA/Levene p-value
// column last); rendering keeps those strings verbatim so the panel matches
// the report CSV cell for cell.

import type { TablePayload } from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function renderWhatIfTable(table: TablePayload): string {
  const head = table.header.map((h) => `<th>${esc(h)}</th>`).join("");
  const body = table.rows
    .map((row, i) => {
      const kind = i % 2 === 0 ? "mean-row" : "std-row";
      const cells = row.map((cell) => `<td>${esc(cell)}</td>`).join("");
      return `<tr class="${kind}">${cells}</tr>`;
    })
    .join("\n");
  return `<table class="whatif"><thead><tr>${head}</tr></thead><tbody>\n${body}\n</tbody></table>`;
}

/** Cell strings exactly as rendered, header first. */
export function tableCells(table: TablePayload): string[][] {
  return [[...table.header], ...table.rows.map((row) => [...row])];
}

/** Parse a report CSV (as written by the backend) into cell strings. */
export function parseReportCsv(text: string): string[][] {
  return text
    .trim()
    .split(/\r?\n/)
    .map((line) => line.split(","));
}

export function sameCells(a: string[][], b: string[][]): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i].length !== b[i].length) return false;
    for (let j = 0; j < a[i].length; j++) {
      if (a[i][j] !== b[i][j]) return false;
    }
  }
  return true;
}
