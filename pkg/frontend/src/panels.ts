/** Panel definitions: which setting each panel draws and its axis labels. */

import { SummaryRow } from "./csv.js";

export type PanelName = "standard" | "standard_zoom" | "sphere" | "confound";

export const PANELS: PanelName[] = ["standard", "standard_zoom", "sphere", "confound"];

interface PanelDef {
  setting: string;
  title: string;
  xLabel: string;
  /** optional window on the swept parameter */
  window?: [number, number];
}

const DEFS: Record<PanelName, PanelDef> = {
  standard: { setting: "standard", title: "Standard bandit", xLabel: "gap" },
  standard_zoom: {
    setting: "standard",
    title: "Standard bandit (zoom)",
    xLabel: "gap",
    window: [0.11, 0.19],
  },
  sphere: { setting: "sphere", title: "Unit sphere", xLabel: "dimension" },
  confound: { setting: "confound", title: "Confounding arm", xLabel: "dimension" },
};

export class PanelDataError extends Error {}

export function panelDef(panel: PanelName): PanelDef {
  return DEFS[panel];
}

/** True when the CSV has rows for the panel (setting present, window nonempty). */
export function hasPanelRows(panel: PanelName, rows: SummaryRow[]): boolean {
  try {
    panelRows(panel, rows);
    return true;
  } catch (err) {
    if (err instanceof PanelDataError) return false;
    throw err;
  }
}

/** Rows belonging to the panel, sorted by (algorithm, param). */
export function panelRows(panel: PanelName, rows: SummaryRow[]): SummaryRow[] {
  const def = DEFS[panel];
  let out = rows.filter((r) => r.setting === def.setting);
  if (def.window) {
    const [lo, hi] = def.window;
    out = out.filter((r) => r.param >= lo && r.param <= hi);
  }
  if (out.length === 0) {
    throw new PanelDataError(
      `no rows for panel "${panel}" (setting "${def.setting}") in the CSV`,
    );
  }
  return out
    .slice()
    .sort((a, b) =>
      a.algorithm === b.algorithm ? a.param - b.param : a.algorithm < b.algorithm ? -1 : 1,
    );
}
