/**
 * Minimal virtual DOM: views are pure functions returning VNode trees, so
 * tests can assert on rendered structure without a browser. `mount` realizes
 * a tree on a real document.
 */

export type Handler = (event: Event) => void;
export type Attrs = Record<string, string | boolean | Handler>;
export type Child = VNode | string;

export interface VNode {
  tag: string;
  attrs: Attrs;
  children: Child[];
}

type ChildInput = Child | null | undefined | false | ChildInput[];

export function h(tag: string, attrs: Attrs = {}, ...children: ChildInput[]): VNode {
  const flat: Child[] = [];
  const push = (c: ChildInput): void => {
    if (c === null || c === undefined || c === false) return;
    if (Array.isArray(c)) {
      c.forEach(push);
      return;
    }
    flat.push(c);
  };
  children.forEach(push);
  return { tag, attrs, children: flat };
}

/** Depth-first search over element nodes. */
export function findAll(root: VNode, pred: (node: VNode) => boolean): VNode[] {
  const out: VNode[] = [];
  const walk = (node: VNode): void => {
    if (pred(node)) out.push(node);
    for (const child of node.children) {
      if (typeof child !== "string") walk(child);
    }
  };
  walk(root);
  return out;
}

export function classesOf(node: VNode): string[] {
  const cls = node.attrs["class"];
  return typeof cls === "string" ? cls.split(/\s+/).filter(Boolean) : [];
}

export function hasClass(node: VNode, cls: string): boolean {
  return classesOf(node).includes(cls);
}

export function byClass(root: VNode, cls: string): VNode[] {
  return findAll(root, (n) => hasClass(n, cls));
}

/** Concatenated text content, like Element.textContent. */
export function textOf(node: Child): string {
  if (typeof node === "string") return node;
  return node.children.map(textOf).join("");
}

export function mount(node: VNode, parent: Element): Element {
  const doc = parent.ownerDocument;
  const el = doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    if (typeof value === "function") {
      el.addEventListener(key.replace(/^on/, ""), value);
    } else if (typeof value === "boolean") {
      if (value) el.setAttribute(key, "");
    } else {
      el.setAttribute(key, value);
    }
  }
  for (const child of node.children) {
    if (typeof child === "string") {
      el.appendChild(doc.createTextNode(child));
    } else {
      mount(child, el);
    }
  }
  parent.appendChild(el);
  return el;
}

export function replaceChildren(node: VNode, parent: Element): void {
  parent.replaceChildren();
  mount(node, parent);
}
