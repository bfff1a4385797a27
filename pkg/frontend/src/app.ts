import { ApiClient } from "./client.js";
import { QueryPanel } from "./query_panel.js";
import { parseRosterLines } from "./records.js";
import { RocPanel } from "./roc_panel.js";

const LAYOUT = `
  <header>
    <h1>evisearch evidence explorer</h1>
  </header>
  <section class="roster">
    <label>record roster (paste the record lines you uploaded)
      <textarea data-roster rows="4"></textarea>
    </label>
    <button data-load-roster type="button">load roster</button>
    <div data-roster-error class="inline-error" hidden></div>
  </section>
  <main>
    <section data-query-panel class="panel"><h2>evidence</h2><div data-body></div></section>
    <section data-roc-panel class="panel"><h2>operating point</h2><div data-body></div></section>
  </main>
`;

export interface App {
  queryPanel: QueryPanel;
  rocPanel: RocPanel;
}

/** Assemble both panels against one API client. */
export function createApp(root: HTMLElement, client: ApiClient = new ApiClient("")): App {
  root.innerHTML = LAYOUT;
  const queryPanel = new QueryPanel(
    root.querySelector<HTMLElement>("[data-query-panel] [data-body]")!,
    client,
  );
  const rocPanel = new RocPanel(
    root.querySelector<HTMLElement>("[data-roc-panel] [data-body]")!,
    client,
  );

  const rosterInput = root.querySelector<HTMLTextAreaElement>("[data-roster]")!;
  const rosterError = root.querySelector<HTMLElement>("[data-roster-error]")!;
  root.querySelector("[data-load-roster]")!.addEventListener("click", () => {
    try {
      queryPanel.setRoster(parseRosterLines(rosterInput.value));
      rosterError.hidden = true;
      rosterError.textContent = "";
    } catch (err) {
      rosterError.textContent = err instanceof Error ? err.message : String(err);
      rosterError.hidden = false;
    }
  });

  return { queryPanel, rocPanel };
}

// Boot only inside a real page; importing this module in tests is a no-op.
if (typeof document !== "undefined") {
  const mount = document.getElementById("app");
  if (mount !== null) createApp(mount);
}
