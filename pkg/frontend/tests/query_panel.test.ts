import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, WireResponse } from "../src/client.js";
import { QueryPanel } from "../src/query_panel.js";
import { Deferred, deferred, eventually, jsonResponse, routedFetch, textResponse } from "./helpers.js";

// Ids deliberately out of lexical order: the DOM must mirror service order.
const HITS_RAW =
  '{"hits":[' +
  '{"id":"e7","score":5.5,"label":"a","attributes":{"gender":"F"}},' +
  '{"id":"e2","score":4.25,"label":"b"},' +
  '{"id":"e9","score":3.5,"label":"a"},' +
  '{"id":"e1","score":2,"label":null},' +
  '{"id":"e5","score":1.5,"label":"a"}]}';

const SCORES_RAW =
  '{"classes":["a","b"],"raw":[12.75,4.25],"probabilities":[0.75,0.25]}';

function buildPanel(route: (url: string, body: string | undefined) => WireResponse | Promise<WireResponse>) {
  const fetchFn = routedFetch((url, call) => route(url, call.init?.body));
  const root = document.createElement("div");
  document.body.appendChild(root);
  const panel = new QueryPanel(root, new ApiClient("", fetchFn));
  return { panel, root, fetchFn };
}

function plainRoute(url: string): WireResponse {
  if (url === "/search") return textResponse(HITS_RAW);
  if (url === "/classify") return textResponse(SCORES_RAW);
  throw new Error(`unexpected url ${url}`);
}

function rowIds(root: HTMLElement): string[] {
  return Array.from(root.querySelectorAll<HTMLElement>("[data-hits] tr")).map(
    (tr) => tr.dataset.id!,
  );
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("QueryPanel rendering", () => {
  it("renders evidence rows in service order with values read through", async () => {
    const { panel, root } = buildPanel(plainRoute);
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0";
    await panel.submit();

    expect(rowIds(root)).toEqual(["e7", "e2", "e9", "e1", "e5"]);
    const parsed = JSON.parse(HITS_RAW).hits as Array<{ score: number }>;
    const scoreCells = root.querySelectorAll("[data-hits] tr td:nth-child(3)");
    scoreCells.forEach((cell, i) => {
      expect(Number(cell.textContent)).toBe(parsed[i].score);
    });
    const chips = Array.from(root.querySelectorAll<HTMLElement>("[data-probs] .prob"));
    expect(chips.map((c) => c.dataset.class)).toEqual(["a", "b"]);
    expect(Number(chips[0].textContent!.split(": ")[1])).toBe(0.75);
    expect(root.querySelector("[data-hits] td:nth-child(5) .chip")!.textContent).toBe(
      "gender=F",
    );
  });

  it("tags rows match/mismatch against the selected record's label", async () => {
    const { panel, root } = buildPanel(plainRoute);
    panel.setRoster([{ id: "q1", vector: [1, 2], label: "a" }]);
    await panel.selectRecord("q1");

    expect(root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value).toBe("1, 2");
    const classes = Array.from(
      root.querySelectorAll<HTMLElement>("[data-hits] tr"),
    ).map((tr) => tr.className);
    expect(classes).toEqual([
      "hit match", // e7: a
      "hit mismatch", // e2: b
      "hit match", // e9: a
      "hit", // e1: unlabeled, no verdict
      "hit match", // e5: a
    ]);
  });

  it("leaves rows untagged for pasted vectors with no known label", async () => {
    const { panel, root } = buildPanel(plainRoute);
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "0.5, 0.5";
    await panel.submit();
    for (const tr of root.querySelectorAll("[data-hits] tr")) {
      expect(tr.className).toBe("hit");
    }
  });
});

describe("QueryPanel errors", () => {
  it("surfaces service errors inline and keeps the prior evidence", async () => {
    let failSearch = false;
    const { panel, root } = buildPanel((url) => {
      if (url === "/search" && failSearch) {
        return jsonResponse({ error: "bad_query", detail: "expected 2 numbers, got 3" }, 400);
      }
      return plainRoute(url);
    });
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0";
    await panel.submit();
    expect(rowIds(root)).toHaveLength(5);

    failSearch = true;
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0, 9";
    await panel.submit();

    const errorBox = root.querySelector<HTMLElement>("[data-error]")!;
    expect(errorBox.hidden).toBe(false);
    expect(errorBox.textContent).toBe("bad_query: expected 2 numbers, got 3");
    expect(rowIds(root)).toHaveLength(5); // prior evidence not wiped
  });

  it("surfaces unparseable input inline without calling the service", async () => {
    const { panel, root, fetchFn } = buildPanel(plainRoute);
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "one, two";
    await panel.submit();
    const errorBox = root.querySelector<HTMLElement>("[data-error]")!;
    expect(errorBox.hidden).toBe(false);
    expect(errorBox.textContent).toContain("not a number");
    expect(fetchFn.calls).toHaveLength(0);
  });

  it("clears the error banner after the next successful query", async () => {
    let fail = true;
    const { panel, root } = buildPanel((url) => {
      if (fail) return jsonResponse({ error: "no_index", detail: "no index built" }, 409);
      return plainRoute(url);
    });
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0";
    await panel.submit();
    expect(root.querySelector<HTMLElement>("[data-error]")!.hidden).toBe(false);

    fail = false;
    await panel.submit();
    expect(root.querySelector<HTMLElement>("[data-error]")!.hidden).toBe(true);
    expect(rowIds(root)).toHaveLength(5);
  });
});

describe("QueryPanel concurrency", () => {
  it("discards stale responses when a newer query supersedes them", async () => {
    const pending: Deferred<WireResponse>[] = [];
    const { panel, root } = buildPanel(() => {
      const d = deferred<WireResponse>();
      pending.push(d);
      return d.promise;
    });
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0";
    const first = panel.submit(); // pending[0]=search, pending[1]=classify
    const second = panel.submit(); // pending[2], pending[3]

    const staleHits = HITS_RAW.replace(/e(\d)/g, "old$1");
    pending[2].resolve(textResponse(HITS_RAW));
    pending[3].resolve(textResponse(SCORES_RAW));
    await second;
    expect(rowIds(root)[0]).toBe("e7");

    pending[0].resolve(textResponse(staleHits));
    pending[1].resolve(textResponse(SCORES_RAW));
    await first;
    expect(rowIds(root)[0]).toBe("e7"); // stale reply never applied
  });

  it("ignores errors from superseded requests", async () => {
    const pending: Deferred<WireResponse>[] = [];
    const { panel, root } = buildPanel(() => {
      const d = deferred<WireResponse>();
      pending.push(d);
      return d.promise;
    });
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0";
    const first = panel.submit();
    const second = panel.submit();

    pending[2].resolve(textResponse(HITS_RAW));
    pending[3].resolve(textResponse(SCORES_RAW));
    await second;

    pending[0].resolve(jsonResponse({ error: "no_corpus", detail: "gone" }, 409));
    pending[1].resolve(textResponse(SCORES_RAW));
    await first;
    expect(root.querySelector<HTMLElement>("[data-error]")!.hidden).toBe(true);
    expect(rowIds(root)).toHaveLength(5);
  });
});

describe("QueryPanel k control", () => {
  it("re-queries on k change; the longer list is prefix-consistent", async () => {
    const moreRaw = HITS_RAW.replace(
      "]}",
      ',{"id":"e3","score":1.25,"label":"b"},{"id":"e8","score":1,"label":"a"}]}',
    );
    const { root } = buildPanel((url, body) => {
      if (url === "/classify") return textResponse(SCORES_RAW);
      const k = (JSON.parse(body!) as { k: number }).k;
      return textResponse(k === 5 ? HITS_RAW : moreRaw);
    });
    root.querySelector<HTMLTextAreaElement>("[data-vector]")!.value = "1, 0";
    const kInput = root.querySelector<HTMLInputElement>("[data-k]")!;

    kInput.value = "5";
    kInput.dispatchEvent(new Event("change"));
    await eventually(() => expect(rowIds(root)).toHaveLength(5));
    const shortIds = rowIds(root);

    kInput.value = "7";
    kInput.dispatchEvent(new Event("change"));
    await eventually(() => expect(rowIds(root)).toHaveLength(7));
    expect(rowIds(root).slice(0, 5)).toEqual(shortIds);
  });
});
