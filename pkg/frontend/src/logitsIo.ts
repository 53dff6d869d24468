/**
 * Writers/readers for the primary package's logit file formats.
 *
 * jsonl: one {"step": i, "scores": [...]} object per line.
 * binary: magic "SXLG", little-endian u32 version (= 1), u32 vocab_size,
 * u32 rows, then rows*vocab_size little-endian float32 values.
 */

import { readFileSync, writeFileSync } from "node:fs";

const MAGIC = "SXLG";
const VERSION = 1;

export function writeLogitsJsonl(path: string, rows: readonly (readonly number[])[]): void {
  const lines = rows.map((scores, step) => JSON.stringify({ step, scores: [...scores] }));
  writeFileSync(path, lines.join("\n") + "\n");
}

export function writeLogitsBinary(path: string, rows: readonly (readonly number[])[]): void {
  const vocab = rows[0]?.length ?? 0;
  const buf = Buffer.alloc(16 + 4 * rows.length * vocab);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(vocab, 8);
  buf.writeUInt32LE(rows.length, 12);
  let offset = 16;
  for (const row of rows) {
    for (const value of row) {
      buf.writeFloatLE(value, offset);
      offset += 4;
    }
  }
  writeFileSync(path, buf);
}

export function readLogitsBinary(path: string): number[][] {
  const buf = readFileSync(path);
  if (buf.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new Error("bad magic");
  }
  if (buf.readUInt32LE(4) !== VERSION) {
    throw new Error("unsupported version");
  }
  const vocab = buf.readUInt32LE(8);
  const rows = buf.readUInt32LE(12);
  const out: number[][] = [];
  let offset = 16;
  for (let r = 0; r < rows; r++) {
    const row: number[] = [];
    for (let c = 0; c < vocab; c++) {
      row.push(buf.readFloatLE(offset));
      offset += 4;
    }
    out.push(row);
  }
  return out;
}

export interface ReportRecord {
  step: number;
  decoder: string;
  chosen_token: number;
  support_size: number;
  entropy_nats: number;
  kkt_active_residual: number;
  kkt_inactive_violation: number;
  solver_iters: number;
  coverage_analytic: number | null;
  coverage_mc: number | null;
  coverage_mc_stderr: number | null;
  probs?: number[];
}

export function readReportJsonl(path: string): ReportRecord[] {
  return readFileSync(path, "utf8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as ReportRecord);
}
