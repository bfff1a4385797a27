import { ApiClient, ServiceError } from "./client.js";
import { LatestGate } from "./generation.js";
import { CurvePoint, bestIndex, clampIndex, curvePoints, snapIndex, specificity } from "./roc.js";
import { formatReal } from "./wire.js";

// SVG plot geometry: unit square scaled by PLOT, padded by PAD on all sides.
const PLOT = 100;
const PAD = 5;

const TEMPLATE = `
  <div class="controls">
    <label>run <input data-run-name value=""></label>
    <label>class <input data-class-name value=""></label>
    <button data-load type="button">load curve</button>
  </div>
  <div data-empty class="empty-state" hidden></div>
  <div data-plot-area hidden>
    <svg data-plot viewBox="0 0 ${PLOT + 2 * PAD} ${PLOT + 2 * PAD}" class="roc-plot">
      <line x1="${PAD}" y1="${PAD + PLOT}" x2="${PAD + PLOT}" y2="${PAD}" class="diagonal"></line>
      <polyline data-curve fill="none"></polyline>
      <circle data-marker r="2.5"></circle>
    </svg>
    <input data-slider type="range" min="0" max="0" step="1" value="0">
    <button data-knee type="button">top-left point</button>
    <dl class="readout">
      <dt>sensitivity</dt><dd data-sens></dd>
      <dt>specificity</dt><dd data-spec></dd>
      <dt>threshold</dt><dd data-threshold></dd>
      <dt>auc</dt><dd data-auc></dd>
    </dl>
  </div>
`;

/**
 * Operating-point explorer over one exported curve.
 *
 * Dragging on the plot (or moving the slider) snaps to the nearest exported
 * point and never interpolates, so sensitivity, specificity, and threshold
 * always restate a point the service computed: sensitivity is the point's
 * tpr verbatim and specificity is 1 - fpr, the panel's only arithmetic.
 * Unknown run/class answers become an empty-state prompt.
 */
export class RocPanel {
  private readonly gate = new LatestGate();
  private points: CurvePoint[] = [];
  private index = 0;
  private dragging = false;

  private readonly runInput: HTMLInputElement;
  private readonly classInput: HTMLInputElement;
  private readonly emptyBox: HTMLElement;
  private readonly plotArea: HTMLElement;
  private readonly svg: SVGSVGElement;
  private readonly curveLine: SVGPolylineElement;
  private readonly marker: SVGCircleElement;
  private readonly slider: HTMLInputElement;
  private readonly sensOut: HTMLElement;
  private readonly specOut: HTMLElement;
  private readonly thresholdOut: HTMLElement;
  private readonly aucOut: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {
    root.innerHTML = TEMPLATE;
    this.runInput = root.querySelector("[data-run-name]")!;
    this.classInput = root.querySelector("[data-class-name]")!;
    this.emptyBox = root.querySelector("[data-empty]")!;
    this.plotArea = root.querySelector("[data-plot-area]")!;
    this.svg = root.querySelector("[data-plot]")!;
    this.curveLine = root.querySelector("[data-curve]")!;
    this.marker = root.querySelector("[data-marker]")!;
    this.slider = root.querySelector("[data-slider]")!;
    this.sensOut = root.querySelector("[data-sens]")!;
    this.specOut = root.querySelector("[data-spec]")!;
    this.thresholdOut = root.querySelector("[data-threshold]")!;
    this.aucOut = root.querySelector("[data-auc]")!;

    root.querySelector("[data-load]")!.addEventListener("click", () => {
      void this.load(this.runInput.value, this.classInput.value);
    });
    this.slider.addEventListener("input", () => {
      this.select(Number.parseInt(this.slider.value, 10));
    });
    root.querySelector("[data-knee]")!.addEventListener("click", () => {
      if (this.points.length > 0) this.select(bestIndex(this.points));
    });
    this.svg.addEventListener("pointerdown", (event) => {
      this.dragging = true;
      this.dragAt(event.clientX);
    });
    this.svg.addEventListener("pointermove", (event) => {
      if (this.dragging) this.dragAt(event.clientX);
    });
    for (const done of ["pointerup", "pointerleave", "pointercancel"]) {
      this.svg.addEventListener(done, () => {
        this.dragging = false;
      });
    }
  }

  /** Fetch and render a curve; unknown run/class shows the empty state. */
  async load(run: string, className: string): Promise<void> {
    const ticket = this.gate.next();
    this.runInput.value = run;
    this.classInput.value = className;
    try {
      const exported = await this.client.roc(run, className);
      if (!this.gate.isCurrent(ticket)) return;
      this.points = curvePoints(exported);
      this.emptyBox.hidden = true;
      this.emptyBox.textContent = "";
      this.plotArea.hidden = false;
      this.curveLine.setAttribute(
        "points",
        this.points.map((p) => `${this.x(p)},${this.y(p)}`).join(" "),
      );
      this.slider.max = String(this.points.length - 1);
      this.aucOut.textContent = formatReal(exported.auc);
      this.select(0);
    } catch (err) {
      if (!this.gate.isCurrent(ticket)) return;
      this.points = [];
      this.plotArea.hidden = true;
      this.emptyBox.hidden = false;
      this.emptyBox.textContent =
        err instanceof ServiceError && err.status === 404
          ? `No curve for run "${run}" class "${className}". Run an evaluation, then try again.`
          : err instanceof Error
            ? err.message
            : String(err);
    }
  }

  /** Snap the marker to the exported point at index (clamped). */
  select(index: number): void {
    if (this.points.length === 0) return;
    this.index = clampIndex(this.points, index);
    const point = this.points[this.index];
    this.slider.value = String(this.index);
    this.marker.setAttribute("cx", String(this.x(point)));
    this.marker.setAttribute("cy", String(this.y(point)));
    this.sensOut.textContent = formatReal(point.tpr);
    this.specOut.textContent = formatReal(specificity(point));
    this.thresholdOut.textContent = point.thresholdText;
  }

  /** Snap to the point nearest a false-positive rate (drag target). */
  dragToFpr(fpr: number): void {
    if (this.points.length === 0) return;
    this.select(snapIndex(this.points, fpr));
  }

  /** Currently selected point, for callers that mirror the readout. */
  selected(): CurvePoint | null {
    return this.points.length ? this.points[this.index] : null;
  }

  private dragAt(clientX: number): void {
    const rect = this.svg.getBoundingClientRect();
    if (rect.width === 0) return; // layout not realized (headless)
    const viewX = ((clientX - rect.left) / rect.width) * (PLOT + 2 * PAD);
    this.dragToFpr((viewX - PAD) / PLOT);
  }

  private x(point: CurvePoint): number {
    return PAD + point.fpr * PLOT;
  }

  private y(point: CurvePoint): number {
    return PAD + (1 - point.tpr) * PLOT;
  }
}
