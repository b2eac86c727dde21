import type { EChartsOption, SeriesOption } from "echarts";
import { Table, numeric, requireColumns } from "./csv";

export const FIGURE_KINDS = [
  "bagnold",
  "deposit",
  "runout_trend",
  "velocity_profiles",
  "stop_time_trend",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: Table[];
  normalize: boolean;
}

const BASE: EChartsOption = {
  animation: false,
  backgroundColor: "#ffffff",
  grid: { left: 70, right: 30, top: 60, bottom: 55, containLabel: false },
  legend: { top: 28, type: "plain" },
};

function axes(xName: string, yName: string): Partial<EChartsOption> {
  return {
    xAxis: { type: "value", name: xName, nameLocation: "middle", nameGap: 30 },
    yAxis: { type: "value", name: yName, nameLocation: "middle", nameGap: 50 },
  };
}

function emptyFigure(title: string): EChartsOption {
  return {
    ...BASE,
    title: { text: title, left: "center" },
    ...axes("", ""),
    series: [],
    graphic: [
      {
        type: "text",
        left: "center",
        top: "middle",
        style: { text: "no data in input series", fontSize: 18, fill: "#888" },
      },
    ],
  };
}

/** Simulated layer velocities (symbols) against the closed-form steady
 * profile (curve), velocity on x, height on y. */
function bagnold(spec: FigureSpec): EChartsOption {
  const table = spec.inputs[0];
  requireColumns(table, ["layer_index", "z_mid", "u_sim", "u_exact"], "bagnold");
  if (table.rows.length === 0) return emptyFigure("Steady velocity profile");
  const rows = [...table.rows].sort(
    (a, b) => numeric(a, "z_mid") - numeric(b, "z_mid"),
  );
  const sim = rows.map((r) => [numeric(r, "u_sim"), numeric(r, "z_mid")]);
  const exact = rows.map((r) => [numeric(r, "u_exact"), numeric(r, "z_mid")]);
  return {
    ...BASE,
    title: { text: "Steady velocity profile on the incline", left: "center" },
    ...axes("downslope velocity [m/s]", "height above bed [m]"),
    series: [
      { name: "analytical (layer averages)", type: "line", data: exact,
        symbol: "none", lineStyle: { width: 2 } },
      { name: "simulated layers", type: "scatter", data: sim,
        symbol: "circle", symbolSize: 8 },
    ],
  };
}

/** Final thickness profiles h(x), one series per input file. */
function deposit(spec: FigureSpec): EChartsOption {
  const series: SeriesOption[] = [];
  for (const table of spec.inputs) {
    requireColumns(table, ["x", "h"], "deposit");
    const pts = [...table.rows]
      .sort((a, b) => numeric(a, "x") - numeric(b, "x"))
      .map((r) => [numeric(r, "x"), numeric(r, "h")]);
    if (pts.length > 0) {
      series.push({ name: table.label, type: "line", data: pts, symbol: "none" });
    }
  }
  if (series.length === 0) return emptyFigure("Deposit profiles");
  return {
    ...BASE,
    title: { text: "Deposit profiles", left: "center" },
    ...axes("downslope position x [m]", "thickness h [m]"),
    series,
  };
}

interface TrendSettings {
  title: string;
  column: string;
  normalizedColumn: string;
  yName: string;
  normalizedYName: string;
}

/** One series per (slope, friction mode, layer count, shear order) from the
 * sweep summary, plotted against the bed thickness in millimetres. */
function sweepTrend(spec: FigureSpec, cfg: TrendSettings): EChartsOption {
  const table = spec.inputs[0];
  const valueColumn = spec.normalize ? cfg.normalizedColumn : cfg.column;
  requireColumns(
    table,
    ["theta_deg", "h_i", "friction_mode", "layers", "shear_order", valueColumn],
    cfg.title,
  );
  const groups = new Map<string, [number, number][]>();
  const hasStatus = table.columns.includes("status");
  for (const row of table.rows) {
    if (hasStatus && row["status"] !== "ok") continue;
    const key = `${row["friction_mode"]} ${row["theta_deg"]}deg ` +
      `N=${row["layers"]} order ${row["shear_order"]}`;
    const y = numeric(row, valueColumn);
    if (!Number.isFinite(y)) continue;
    const pts = groups.get(key) ?? [];
    pts.push([numeric(row, "h_i") * 1000.0, y]);
    groups.set(key, pts);
  }
  const series: SeriesOption[] = [...groups.entries()]
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([name, pts]) => ({
      name,
      type: "line" as const,
      data: pts.sort((p, q) => p[0] - q[0]),
      symbol: "circle",
      symbolSize: 7,
    }));
  if (series.length === 0) return emptyFigure(cfg.title);
  return {
    ...BASE,
    title: { text: cfg.title, left: "center" },
    ...axes("erodible bed thickness h_i [mm]",
            spec.normalize ? cfg.normalizedYName : cfg.yName),
    series,
  };
}

/** Downslope velocity profiles u(z) at the requested stations over time. */
function velocityProfiles(spec: FigureSpec): EChartsOption {
  const table = spec.inputs[0];
  requireColumns(
    table,
    ["t", "x_station", "layer_index", "z_bottom", "z_top", "u"],
    "velocity_profiles",
  );
  const stations = [...new Set(table.rows.map((r) => numeric(r, "x_station")))]
    .sort((a, b) => a - b);
  const series: SeriesOption[] = [];
  for (const station of stations) {
    const atStation = table.rows.filter(
      (r) => numeric(r, "x_station") === station,
    );
    const times = [...new Set(atStation.map((r) => numeric(r, "t")))]
      .sort((a, b) => a - b);
    // subsample to at most 8 profiles per station, endpoints included
    const keep = times.length <= 8
      ? times
      : Array.from({ length: 8 },
                   (_, i) => times[Math.round((i * (times.length - 1)) / 7)]);
    for (const t of keep) {
      const pts = atStation
        .filter((r) => numeric(r, "t") === t)
        .sort((a, b) => numeric(a, "layer_index") - numeric(b, "layer_index"))
        .map((r) => [
          numeric(r, "u"),
          0.5 * (numeric(r, "z_bottom") + numeric(r, "z_top")),
        ]);
      if (pts.length > 0 && pts.some((p) => Math.abs(p[0]) > 0)) {
        series.push({
          name: `x=${station} m, t=${t.toFixed(2)} s`,
          type: "line",
          data: pts,
          symbol: "none",
        });
      }
    }
  }
  if (series.length === 0) return emptyFigure("Velocity profiles");
  return {
    ...BASE,
    legend: { top: 24, type: "scroll" },
    title: { text: "Normal profiles of the downslope velocity", left: "center" },
    ...axes("downslope velocity u [m/s]", "height above bed z [m]"),
    series,
  };
}

export function buildFigure(spec: FigureSpec): EChartsOption {
  switch (spec.kind) {
    case "bagnold":
      return bagnold(spec);
    case "deposit":
      return deposit(spec);
    case "runout_trend":
      return sweepTrend(spec, {
        title: "Runout vs erodible-bed thickness",
        column: "r_f",
        normalizedColumn: "r_f_over_h0",
        yName: "runout r_f [m]",
        normalizedYName: "normalized runout r_f / h_0",
      });
    case "stop_time_trend":
      return sweepTrend(spec, {
        title: "Stopping time vs erodible-bed thickness",
        column: "t_f",
        normalizedColumn: "t_f_over_tau_c",
        yName: "stopping time t_f [s]",
        normalizedYName: "normalized stopping time t_f / tau_c",
      });
    case "velocity_profiles":
      return velocityProfiles(spec);
  }
}
