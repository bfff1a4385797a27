import { ApiClient, ClassScores, Hit, ServiceError } from "./client.js";
import { LatestGate } from "./generation.js";
import { RosterRecord, parseVectorText } from "./records.js";
import { formatReal } from "./wire.js";

const TEMPLATE = `
  <div class="controls">
    <label>record
      <select data-record>
        <option value="">(paste a vector)</option>
      </select>
    </label>
    <label>query vector
      <textarea data-vector rows="2" placeholder="0.1, -2.5, 1.0"></textarea>
    </label>
    <label>k <input data-k type="number" min="1" value="20"></label>
    <label>mode
      <select data-mode>
        <option value="knn">knn</option>
        <option value="zeroshot">zeroshot</option>
      </select>
    </label>
    <button data-run type="button">run query</button>
  </div>
  <div data-error class="inline-error" hidden></div>
  <div data-probs class="prob-strip"></div>
  <table class="evidence">
    <thead>
      <tr><th>#</th><th>id</th><th>score</th><th>label</th><th>attributes</th></tr>
    </thead>
    <tbody data-hits></tbody>
  </table>
`;

/**
 * Evidence panel: submit or pick a query, then inspect the neighbors and
 * class probabilities the service returns for it.
 *
 * Rows are rendered strictly in the service's hit order. When the query
 * comes from a roster record with a known label, each row is tagged
 * match/mismatch against that label. Service errors render inline; stale
 * responses (superseded by a newer action) are discarded.
 */
export class QueryPanel {
  private readonly gate = new LatestGate();
  private roster = new Map<string, RosterRecord>();
  private knownLabel: string | null = null;

  private readonly recordSelect: HTMLSelectElement;
  private readonly vectorInput: HTMLTextAreaElement;
  private readonly kInput: HTMLInputElement;
  private readonly modeSelect: HTMLSelectElement;
  private readonly errorBox: HTMLElement;
  private readonly probsBox: HTMLElement;
  private readonly hitsBody: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {
    root.innerHTML = TEMPLATE;
    this.recordSelect = root.querySelector("[data-record]")!;
    this.vectorInput = root.querySelector("[data-vector]")!;
    this.kInput = root.querySelector("[data-k]")!;
    this.modeSelect = root.querySelector("[data-mode]")!;
    this.errorBox = root.querySelector("[data-error]")!;
    this.probsBox = root.querySelector("[data-probs]")!;
    this.hitsBody = root.querySelector("[data-hits]")!;

    this.recordSelect.addEventListener("change", () => {
      void this.selectRecord(this.recordSelect.value);
    });
    this.kInput.addEventListener("change", () => void this.submit());
    this.modeSelect.addEventListener("change", () => void this.submit());
    root.querySelector("[data-run]")!.addEventListener("click", () => void this.submit());
    // Hand-edited vectors have no trustworthy label to highlight against.
    this.vectorInput.addEventListener("input", () => {
      this.recordSelect.value = "";
      this.knownLabel = null;
    });
  }

  /** Replace the selectable record roster. */
  setRoster(records: RosterRecord[]): void {
    this.roster = new Map(records.map((r) => [r.id, r]));
    this.recordSelect.innerHTML = "";
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "(paste a vector)";
    this.recordSelect.appendChild(blank);
    for (const rec of records) {
      const option = document.createElement("option");
      option.value = rec.id;
      option.textContent = rec.label === null ? rec.id : `${rec.id} [${rec.label}]`;
      this.recordSelect.appendChild(option);
    }
  }

  /** Use a roster record as the query and refresh the evidence list. */
  async selectRecord(id: string): Promise<void> {
    const rec = this.roster.get(id);
    if (!rec) {
      this.knownLabel = null;
      return;
    }
    this.recordSelect.value = id;
    this.vectorInput.value = rec.vector.join(", ");
    this.knownLabel = rec.label;
    await this.submit();
  }

  /** Read the current controls and query the service. */
  async submit(): Promise<void> {
    let vector: number[];
    let k: number;
    try {
      vector = parseVectorText(this.vectorInput.value);
      k = Number.parseInt(this.kInput.value, 10);
      if (!Number.isInteger(k) || k < 1) throw new Error(`k must be a positive integer`);
    } catch (err) {
      this.showError(err);
      return;
    }
    const mode = this.modeSelect.value === "zeroshot" ? "zeroshot" : "knn";
    const ticket = this.gate.next();
    try {
      const [hits, scores] = await Promise.all([
        this.client.search(vector, k),
        this.client.classify(vector, k, mode),
      ]);
      if (!this.gate.isCurrent(ticket)) return; // a newer query superseded this one
      this.renderHits(hits);
      this.renderScores(scores);
      this.errorBox.hidden = true;
      this.errorBox.textContent = "";
    } catch (err) {
      if (!this.gate.isCurrent(ticket)) return;
      this.showError(err);
    }
  }

  private renderHits(hits: Hit[]): void {
    this.hitsBody.innerHTML = "";
    hits.forEach((hit, rank) => {
      const row = document.createElement("tr");
      row.dataset.id = hit.id;
      row.className = "hit";
      if (this.knownLabel !== null && hit.label !== null) {
        row.className += hit.label === this.knownLabel ? " match" : " mismatch";
      }
      const cells = [
        String(rank + 1),
        hit.id,
        formatReal(hit.score),
        hit.label ?? "",
      ];
      for (const text of cells) {
        const cell = document.createElement("td");
        cell.textContent = text;
        row.appendChild(cell);
      }
      const attrCell = document.createElement("td");
      for (const [key, value] of Object.entries(hit.attributes ?? {})) {
        const chip = document.createElement("span");
        chip.className = "chip";
        chip.textContent = `${key}=${value}`;
        attrCell.appendChild(chip);
      }
      row.appendChild(attrCell);
      this.hitsBody.appendChild(row);
    });
  }

  private renderScores(scores: ClassScores): void {
    this.probsBox.innerHTML = "";
    scores.classes.forEach((cls, i) => {
      const chip = document.createElement("span");
      chip.className = "prob";
      chip.dataset.class = cls;
      chip.textContent = `${cls}: ${formatReal(scores.probabilities[i])}`;
      this.probsBox.appendChild(chip);
    });
  }

  private showError(err: unknown): void {
    const message =
      err instanceof ServiceError
        ? `${err.slug}: ${err.detail}`
        : err instanceof Error
          ? err.message
          : String(err);
    this.errorBox.textContent = message;
    this.errorBox.hidden = false;
  }
}
