import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8")) as T;
}

/** Every number reachable in a JSON document, rendered the way the UI
 * renders numbers (String(n)). */
export function collectNumbers(node: unknown, into = new Set<string>()):
    Set<string> {
  if (typeof node === "number") {
    into.add(String(node));
  } else if (Array.isArray(node)) {
    for (const item of node) {
      collectNumbers(item, into);
    }
  } else if (node !== null && typeof node === "object") {
    for (const value of Object.values(node)) {
      collectNumbers(value, into);
    }
  }
  return into;
}

/** The text content of an HTML string (tags stripped). */
export function textContent(html: string): string {
  return html.replace(/<[^>]*>/g, " ");
}

/** Numeric tokens displayed to the user (text content only; attributes and
 * style values are presentational). */
export function displayedNumbers(html: string): string[] {
  return textContent(html).match(/-?\d+(?:\.\d+)?/g) ?? [];
}
