import { ApiClient, ApiError } from "../api.js";
import type { SelectionStore } from "../state.js";
import type {
  ClustersPayload,
  ComparePayload,
  ForecastPayload,
  ManifestPayload,
  PathsPayload,
  ProjectionPayload,
  SnapshotsPayload,
} from "../types.js";
import {
  lassoMonths,
  monthRange,
  projectionView,
  type Polygon,
  type ProjectionView,
} from "../viewmodels/projection.js";
import { modelOptions, resultFor, tierChart, tiersIn } from "../viewmodels/prediction.js";
import { edgeHighlight, evolutionView, pathById, pathsThroughCluster } from "../viewmodels/evolution.js";
import { detailPanel, spatialView } from "../viewmodels/spatial.js";
import { comparisonView, GUIDANCE } from "../viewmodels/comparison.js";
import { clear, htmlEl, svgEl } from "./dom.js";
import {
  FIRST_SNAPSHOT,
  HIGHLIGHT,
  LAST_SNAPSHOT,
  NEGATIVE_BAR,
  POSITIVE_BAR,
  periodColor,
  rampColor,
  TIER_COLORS,
} from "./colors.js";

const WIDE = { width: 880, height: 520, margin: 30 };
const CHART = { width: 880, height: 230, margin: 30 };

interface LoadedData {
  manifest: ManifestPayload;
  projection: ProjectionPayload;
  clusters: ClustersPayload;
  paths: PathsPayload;
  forecast: ForecastPayload;
}

const VIEW_NAMES = ["projection", "prediction", "evolution", "spatial", "comparison"] as const;
type ViewName = (typeof VIEW_NAMES)[number];

export class App {
  private data: LoadedData | null = null;
  private activeModel = "GradientBoostedTrees";
  private edgePaths: string[] = [];
  private detailSeq = 0;
  private sections = new Map<ViewName, HTMLElement>();
  private notice: HTMLElement;
  private projView: ProjectionView | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly store: SelectionStore,
  ) {
    this.notice = htmlEl("div", "notice");
  }

  async init(): Promise<void> {
    try {
      const [manifest, projection, clusters, paths, forecast] = await Promise.all([
        this.api.manifest(),
        this.api.projection(),
        this.api.clusters(),
        this.api.paths(),
        this.api.forecast(),
      ]);
      this.data = { manifest, projection, clusters, paths, forecast };
    } catch (err) {
      this.root.append(
        htmlEl("div", "error", err instanceof ApiError ? `${err.code}: ${err.message}` : String(err)),
      );
      return;
    }
    this.buildLayout();
    this.renderAll();
    this.store.subscribe(() => this.onSelectionChange());
  }

  private say(message: string): void {
    this.notice.textContent = message;
  }

  private buildLayout(): void {
    const data = this.data;
    if (!data) return;
    const header = htmlEl(
      "header",
      "",
      htmlEl("h1", "", "riseer"),
      htmlEl(
        "div",
        "meta",
        `dataset ${data.manifest.dataset_id} · ${data.projection.points.length} snapshots · built ${data.manifest.created_at}`,
      ),
    );
    const tabs = htmlEl("nav", "tabs");
    for (const name of VIEW_NAMES) {
      const button = htmlEl("button", "", name);
      button.addEventListener("click", () => this.showView(name));
      tabs.append(button);
    }
    this.root.append(header, tabs, this.notice);
    for (const name of VIEW_NAMES) {
      const section = htmlEl("section", `view view-${name}`);
      section.hidden = name !== "projection";
      this.sections.set(name, section);
      this.root.append(section);
    }
  }

  private showView(name: ViewName): void {
    for (const [viewName, section] of this.sections) {
      section.hidden = viewName !== name;
    }
  }

  private section(name: ViewName): HTMLElement {
    const section = this.sections.get(name);
    if (!section) {
      throw new Error(`missing section ${name}`);
    }
    return section;
  }

  private renderAll(): void {
    this.renderProjection();
    this.renderPrediction();
    this.renderEvolution();
    this.renderSpatial();
    this.renderComparison();
  }

  private onSelectionChange(): void {
    this.renderPrediction();
    this.renderEvolution();
    this.renderSpatial();
    this.renderComparison();
  }

  /** Cluster ids lit in every view that shows them. */
  private highlightedClusters(): Set<string> {
    const data = this.data;
    const ids = new Set<string>(this.store.comparedClusters());
    if (!data) return ids;
    const pathIds = new Set(this.edgePaths);
    const selected = this.store.selectedPath();
    if (selected !== null) {
      pathIds.add(selected);
    }
    for (const pathId of pathIds) {
      const path = pathById(data.paths, pathId);
      if (path) {
        for (const id of path.cluster_ids) {
          ids.add(id);
        }
      }
    }
    return ids;
  }

  private highlightedPaths(): Set<string> {
    const ids = new Set(this.edgePaths);
    const selected = this.store.selectedPath();
    if (selected !== null) {
      ids.add(selected);
    }
    return ids;
  }

  private renderProjection(): void {
    const data = this.data;
    if (!data) return;
    const section = this.section("projection");
    clear(section);
    const view = projectionView(data.projection, WIDE);
    this.projView = view;

    const svg = svgEl("svg", { width: WIDE.width, height: WIDE.height, class: "plot" });
    svg.append(svgEl("polyline", { points: view.polyline, class: "chronology" }));
    for (const point of view.points) {
      const circle = svgEl("circle", {
        cx: point.x,
        cy: point.y,
        r: 4,
        fill: rampColor(point.t),
        class: "snapshot-dot",
      });
      circle.append(svgEl("title", {}, `${point.month} · ${point.n_active} active`));
      svg.append(circle);
    }
    for (const [point, color, label] of [
      [view.first, FIRST_SNAPSHOT, "first"],
      [view.last, LAST_SNAPSHOT, "last"],
    ] as const) {
      svg.append(svgEl("circle", { cx: point.x, cy: point.y, r: 7, fill: "none", stroke: color, "stroke-width": 2 }));
      svg.append(svgEl("text", { x: point.x + 9, y: point.y - 8, class: "endpoint", fill: color }, `${label} ${point.month}`));
    }
    const preview = svgEl("path", { class: "lasso-preview", d: "" });
    svg.append(preview);
    this.wireLasso(svg, preview);

    const info = htmlEl(
      "div",
      "meta",
      `perplexity ${view.settings.perplexity} · ${view.settings.n_iter} iterations · seed ${view.settings.seed} · KL ${view.kl_divergence.toFixed(3)}`,
    );
    const rangePanel = htmlEl("div", "range-panel");
    rangePanel.textContent = "Drag a lasso around snapshots to query that time range.";
    section.append(svg, info, rangePanel);
  }

  private wireLasso(svg: SVGSVGElement, preview: SVGPathElement): void {
    let polygon: Polygon = [];
    let active = false;
    const toLocal = (event: PointerEvent): [number, number] => {
      const rect = svg.getBoundingClientRect();
      return [event.clientX - rect.left, event.clientY - rect.top];
    };
    svg.addEventListener("pointerdown", (event) => {
      active = true;
      polygon = [toLocal(event)];
      svg.setPointerCapture(event.pointerId);
    });
    svg.addEventListener("pointermove", (event) => {
      if (!active) return;
      const [x, y] = toLocal(event);
      const last = polygon[polygon.length - 1];
      if (Math.hypot(x - last[0], y - last[1]) > 3) {
        polygon.push([x, y]);
        preview.setAttribute("d", `M ${polygon.map(([px, py]) => `${px} ${py}`).join(" L ")} Z`);
      }
    });
    svg.addEventListener("pointerup", () => {
      active = false;
      preview.setAttribute("d", "");
      const view = this.projView;
      if (!view) return;
      const months = lassoMonths(view, polygon);
      polygon = [];
      if (months.length === 0) {
        this.store.clearLasso();
        this.say("Lasso caught no snapshots; selection cleared.");
        return;
      }
      this.store.setLasso(months);
      void this.queryRange(months);
    });
  }

  private async queryRange(months: string[]): Promise<void> {
    const range = monthRange(months);
    if (!range) return;
    const generation = this.store.generation;
    let payload: SnapshotsPayload;
    try {
      payload = await this.api.snapshots(range.from, range.to);
    } catch (err) {
      this.say(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
      return;
    }
    if (!this.store.isCurrent(generation)) {
      return;
    }
    const panel = this.section("projection").querySelector(".range-panel");
    if (!panel) return;
    clear(panel);
    panel.append(
      htmlEl("div", "meta", `${range.from} to ${range.to} · ${payload.snapshots.length} months`),
    );
    const table = htmlEl("table", "snapshot-table");
    table.append(
      htmlEl("tr", "", htmlEl("th", "", "month"), htmlEl("th", "", "active"), htmlEl("th", "", "pri/sec/ter")),
    );
    for (const snap of payload.snapshots) {
      table.append(
        htmlEl(
          "tr",
          "",
          htmlEl("td", "", snap.month),
          htmlEl("td", "", String(snap.total)),
          htmlEl("td", "", snap.counts.join(" / ")),
        ),
      );
    }
    panel.append(table);
  }

  private renderPrediction(): void {
    const data = this.data;
    if (!data) return;
    const section = this.section("prediction");
    clear(section);

    const switcher = htmlEl("div", "switcher");
    for (const option of modelOptions(data.forecast)) {
      const button = htmlEl("button", option.model === this.activeModel ? "active" : "", option.model);
      button.disabled = !option.available;
      button.addEventListener("click", () => {
        this.activeModel = option.model;
        this.renderPrediction();
      });
      switcher.append(button);
    }
    section.append(switcher);

    const selected = new Set(this.store.lassoedMonths());
    for (const tier of tiersIn(data.forecast)) {
      const result = resultFor(data.forecast, tier, this.activeModel);
      if (!result) continue;
      const chart = tierChart(result, data.forecast.feature_names, CHART, selected);
      const svg = svgEl("svg", { width: CHART.width, height: CHART.height, class: "plot" });
      for (const column of chart.columns) {
        for (const segment of column.segments) {
          svg.append(
            svgEl("rect", {
              x: column.x - 2,
              y: Math.min(segment.y0, segment.y1),
              width: 4,
              height: Math.abs(segment.y1 - segment.y0),
              fill: segment.sign >= 0 ? POSITIVE_BAR : NEGATIVE_BAR,
              class: "attr-bar",
            }),
          );
        }
        svg.append(
          svgEl("line", {
            x1: column.x - 4,
            x2: column.x + 4,
            y1: column.markY,
            y2: column.markY,
            class: column.highlighted ? "mark highlighted" : "mark",
          }),
        );
      }
      svg.append(
        svgEl("polyline", {
          points: chart.actual.map((p) => `${p.x},${p.y}`).join(" "),
          class: "series actual",
          stroke: TIER_COLORS[tier] ?? "#555",
        }),
      );
      svg.append(
        svgEl("polyline", {
          points: chart.predicted.map((p) => `${p.x},${p.y}`).join(" "),
          class: "series predicted",
          stroke: TIER_COLORS[tier] ?? "#555",
        }),
      );
      for (const point of chart.predicted) {
        if (point.highlighted) {
          svg.append(svgEl("circle", { cx: point.x, cy: point.y, r: 5, fill: "none", stroke: HIGHLIGHT, "stroke-width": 2 }));
        }
      }
      section.append(
        htmlEl("h3", "", `${tier} · ${chart.model} · ${chart.mapeLabel}`),
        svg,
      );
    }
  }

  private renderEvolution(): void {
    const data = this.data;
    if (!data) return;
    const section = this.section("evolution");
    clear(section);
    const view = evolutionView(data.clusters, data.paths, WIDE);
    const highlighted = this.highlightedClusters();

    const svg = svgEl("svg", { width: WIDE.width, height: WIDE.height, class: "plot" });
    for (const edge of view.edges) {
      const group = svgEl("g", { class: edge.merge ? "edge merge" : "edge" });
      group.append(
        svgEl("line", {
          x1: edge.x1,
          y1: edge.y1,
          x2: edge.x2,
          y2: edge.y2,
          class:
            highlighted.has(edge.from) && highlighted.has(edge.to) ? "edge-line highlighted" : "edge-line",
        }),
      );
      const midX = (edge.x1 + edge.x2) / 2;
      const midY = (edge.y1 + edge.y2) / 2;
      group.append(svgEl("rect", { x: midX + 6, y: midY - 10, width: 40 * edge.countBar, height: 4, class: "mini count" }));
      group.append(svgEl("rect", { x: midX + 6, y: midY - 3, width: 40 * edge.shiftBar, height: 4, class: "mini shift" }));
      group.append(svgEl("text", { x: midX + 6, y: midY + 12, class: "edge-label" }, edge.label));
      group.addEventListener("click", () => {
        this.edgePaths = edgeHighlight(data.paths, { to_cluster: edge.to });
        this.say(`edge ${edge.from} to ${edge.to}: paths ${this.edgePaths.join(", ")}`);
        this.renderEvolution();
        this.renderSpatial();
      });
      svg.append(group);
    }
    view.rows.forEach((row, i) => {
      svg.append(svgEl("text", { x: 4, y: row.nodes.length > 0 ? row.nodes[0].y - 6 : 20, class: "row-label" }, row.label));
      for (const node of row.nodes) {
        const rect = svgEl("rect", {
          x: node.x,
          y: node.y,
          width: node.width,
          height: node.height,
          rx: 3,
          fill: periodColor(i),
          class: highlighted.has(node.id) ? "cluster-node highlighted" : "cluster-node",
        });
        rect.append(svgEl("title", {}, `${node.id} · ${node.size} enterprises`));
        rect.addEventListener("click", () => this.onClusterClick(node.id));
        svg.append(rect);
        svg.append(
          svgEl("text", { x: node.x + 4, y: node.y + 15, class: "node-label" }, String(node.size)),
        );
      }
    });
    section.append(svg, htmlEl("div", "meta", view.caption));
  }

  private onClusterClick(clusterId: string): void {
    const data = this.data;
    if (!data) return;
    if (this.store.hasCluster(clusterId)) {
      this.store.toggleCluster(clusterId);
      this.store.selectPath(null);
      return;
    }
    if (!this.store.toggleCluster(clusterId)) {
      this.say("Comparison holds at most three clusters; deselect one first.");
      return;
    }
    const through = pathsThroughCluster(data.paths, clusterId);
    this.store.selectPath(through.length > 0 ? through[0] : null);
  }

  private renderSpatial(): void {
    const data = this.data;
    if (!data) return;
    const section = this.section("spatial");
    clear(section);
    const view = spatialView(data.clusters, data.paths, WIDE);
    const highlighted = this.highlightedClusters();
    const litPaths = this.highlightedPaths();

    const svg = svgEl("svg", { width: WIDE.width, height: WIDE.height, class: "plot" });
    for (const hull of view.hulls) {
      svg.append(
        svgEl("polygon", {
          points: hull.points,
          class: "period-hull",
          stroke: periodColor(hull.periodIdx),
          fill: periodColor(hull.periodIdx),
        }),
      );
    }
    for (const curve of view.curves) {
      svg.append(
        svgEl("polyline", {
          points: curve.points,
          class: litPaths.has(curve.path_id) ? "path-curve highlighted" : "path-curve",
        }),
      );
    }
    for (const glyph of view.glyphs) {
      const group = svgEl("g", { class: "glyph" });
      if (glyph.offset) {
        group.append(
          svgEl("circle", { cx: glyph.cx, cy: glyph.cy, r: glyph.r + 4, class: "offset-ring" }),
        );
      }
      const circle = svgEl("circle", {
        cx: glyph.cx,
        cy: glyph.cy,
        r: glyph.r,
        fill: periodColor(glyph.periodIdx),
        class: highlighted.has(glyph.id) ? "glyph-circle highlighted" : "glyph-circle",
      });
      circle.append(svgEl("title", {}, `${glyph.id} · ${glyph.size} enterprises`));
      circle.addEventListener("click", () => {
        this.onClusterClick(glyph.id);
        void this.openDetails(glyph.id);
      });
      group.append(circle);
      group.append(svgEl("text", { x: glyph.cx, y: glyph.cy + 4, class: "glyph-label" }, String(glyph.size)));
      svg.append(group);
    }
    const panel = htmlEl("div", "detail-panel");
    panel.textContent = "Click a glyph to load cluster details.";
    section.append(svg, panel);
  }

  private async openDetails(clusterId: string): Promise<void> {
    this.detailSeq += 1;
    const seq = this.detailSeq;
    let panelData;
    try {
      panelData = detailPanel(await this.api.clusterDetails(clusterId));
    } catch (err) {
      this.say(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
      return;
    }
    if (seq !== this.detailSeq) {
      return;
    }
    const panel = this.section("spatial").querySelector(".detail-panel");
    if (!panel) return;
    clear(panel);
    panel.append(htmlEl("h3", "", `${panelData.clusterId} · ${panelData.periodLabel}`));

    const tiers = htmlEl("div", "detail-block");
    tiers.append(htmlEl("h4", "", "tiers"));
    for (const entry of panelData.tierCounts) {
      tiers.append(htmlEl("div", "", `${entry.tier}: ${entry.count}`));
    }
    const codes = htmlEl("div", "detail-block");
    codes.append(htmlEl("h4", "", "classification codes"));
    for (const entry of panelData.codeCounts) {
      codes.append(htmlEl("div", "", `${entry.code}: ${entry.count}`));
    }

    const spark = svgEl("svg", { width: 320, height: 60, class: "spark" });
    const totals = panelData.registrationTotal;
    const maxTotal = Math.max(...totals, 1);
    const points = totals
      .map((value, i) => `${(i / Math.max(totals.length - 1, 1)) * 316 + 2},${58 - (value / maxTotal) * 54}`)
      .join(" ");
    spark.append(svgEl("polyline", { points, class: "series predicted", stroke: "#4c78a8" }));
    const registration = htmlEl("div", "detail-block");
    registration.append(
      htmlEl("h4", "", "registrations"),
      spark,
      htmlEl("div", "meta", `${totals[totals.length - 1] ?? 0} registered by ${panelData.months[panelData.months.length - 1]}`),
    );

    const lastLiv = panelData.livability[panelData.livability.length - 1];
    const liv = htmlEl("div", "detail-block");
    liv.append(htmlEl("h4", "", "livability"));
    if (lastLiv) {
      liv.append(
        htmlEl("div", "", `livability ${lastLiv.livability.toFixed(3)} · mortality ${lastLiv.mortality.toFixed(3)} (${lastLiv.month})`),
      );
    }

    const heat = htmlEl("div", "detail-block");
    heat.append(htmlEl("h4", "", "density"));
    const canvas = htmlEl("canvas");
    const [rows, cols] = panelData.heat.shape;
    canvas.width = cols * 2;
    canvas.height = rows * 2;
    const ctx = canvas.getContext("2d");
    if (ctx) {
      for (let r = 0; r < rows; r += 1) {
        for (let c = 0; c < cols; c += 1) {
          const value = panelData.heat.cells[r][c];
          if (value <= 0) continue;
          ctx.fillStyle = `rgba(228, 87, 86, ${(value / panelData.heat.maxCell) * 0.9 + 0.1})`;
          // Row 0 is the southern edge of the bbox; canvas y grows downward.
          ctx.fillRect(c * 2, (rows - 1 - r) * 2, 2, 2);
        }
      }
    }
    heat.append(canvas);

    panel.append(tiers, codes, registration, liv, heat);
  }

  private renderComparison(): void {
    const data = this.data;
    if (!data) return;
    const section = this.section("comparison");
    clear(section);
    const ids = this.store.comparedClusters();
    if (ids.length < 2) {
      section.append(htmlEl("div", "guidance", GUIDANCE));
      if (ids.length === 1) {
        section.append(htmlEl("div", "meta", `selected: ${ids[0]}`));
      }
      return;
    }
    const generation = this.store.generation;
    void this.api
      .compare(ids)
      .then((payload) => {
        if (!this.store.isCurrent(generation)) return;
        this.drawComparison(section, payload);
      })
      .catch((err: unknown) => {
        this.say(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
      });
  }

  private drawComparison(section: HTMLElement, payload: ComparePayload): void {
    clear(section);
    const radius = 170;
    const view = comparisonView(payload, radius, WIDE.width / 2, 250);
    if (view.guidance !== null) {
      section.append(htmlEl("div", "guidance", view.guidance));
      return;
    }
    const svg = svgEl("svg", { width: WIDE.width, height: 520, class: "plot" });
    const cx = WIDE.width / 2;
    const cy = 250;
    for (const axis of view.axes) {
      svg.append(
        svgEl("line", {
          x1: cx,
          y1: cy,
          x2: cx + radius * Math.cos(axis.angle),
          y2: cy + radius * Math.sin(axis.angle),
          class: "radar-axis",
          "data-field": axis.field,
        }),
      );
      const label = svgEl(
        "text",
        { x: axis.labelX, y: axis.labelY, class: "axis-label", "data-field": axis.field },
        axis.field,
      );
      label.addEventListener("mouseenter", () => svg.classList.add("axis-hover"));
      label.addEventListener("mouseleave", () => svg.classList.remove("axis-hover"));
      svg.append(label);
    }
    view.overlays.forEach((overlay, i) => {
      const rings = overlay.rings.map((ring) =>
        svgEl("circle", { cx, cy, r: ring.r, class: "radar-ring" }),
      );
      for (const ring of rings) {
        svg.append(ring);
      }
      const polygon = svgEl("polygon", {
        points: overlay.polygon,
        class: `radar-overlay overlay-${i}`,
      });
      polygon.append(
        svgEl(
          "title",
          {},
          overlay.vertices.map((v) => `${v.field}: ${v.value}`).join("\n"),
        ),
      );
      svg.append(polygon);
    });
    const legend = htmlEl("div", "legend");
    view.overlays.forEach((overlay, i) => {
      const ringNote = overlay.rings.map((r) => `${r.band[0]}-${r.band[1]} km: ${r.count}`).join(" · ");
      legend.append(htmlEl("div", `legend-entry overlay-${i}`, `${overlay.id} · rings ${ringNote}`));
    });
    section.append(svg, legend);
  }
}
