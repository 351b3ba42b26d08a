import { readFileSync } from "node:fs";

const fixturesDir = new URL("./fixtures/", import.meta.url);

/**
 * Load a canned API response captured from a live service run over a planted
 * scenario (see scripts/make_fixtures.py). Tests treat these bytes as the
 * server's word: every rendered value must trace back to one of these fields.
 */
export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(new URL(`${name}.json`, fixturesDir), "utf8")) as T;
}

export interface FixtureIndex {
  dataset_id: string;
  detail_ids: string[];
  compare_pair: [string, string];
  compare_same: [string, string];
}
