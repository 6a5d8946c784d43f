/** Summary-CSV reading: schema validation and typed rows. */

export interface SummaryRow {
  setting: string;
  param: number;
  algorithm: string;
  mean_tau: number;
  std_tau: number;
  success_rate: number;
  n_trials: number;
}

export const SUMMARY_COLUMNS = [
  "setting",
  "param",
  "algorithm",
  "mean_tau",
  "std_tau",
  "success_rate",
  "n_trials",
] as const;

export class CsvSchemaError extends Error {}

/** Parse the summary CSV text; throws CsvSchemaError naming any missing column. */
export function parseSummaryCsv(text: string): SummaryRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new CsvSchemaError("summary CSV is empty");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const index = new Map(header.map((name, i) => [name, i]));
  for (const col of SUMMARY_COLUMNS) {
    if (!index.has(col)) {
      throw new CsvSchemaError(`summary CSV missing column "${col}"`);
    }
  }
  const rows: SummaryRow[] = [];
  for (let ln = 1; ln < lines.length; ln++) {
    const cells = lines[ln].split(",");
    if (cells.length < header.length) {
      throw new CsvSchemaError(`row ${ln + 1} has ${cells.length} cells, expected ${header.length}`);
    }
    const cell = (name: string) => cells[index.get(name)!].trim();
    const num = (name: string) => {
      const v = Number(cell(name));
      if (!Number.isFinite(v)) {
        throw new CsvSchemaError(`row ${ln + 1}: column "${name}" is not a number: ${cell(name)}`);
      }
      return v;
    };
    rows.push({
      setting: cell("setting"),
      param: num("param"),
      algorithm: cell("algorithm"),
      mean_tau: num("mean_tau"),
      std_tau: num("std_tau"),
      success_rate: num("success_rate"),
      n_trials: num("n_trials"),
    });
  }
  return rows;
}
