// Tiny element builder. Keeps the views free of innerHTML string assembly
// so payload text can never be interpreted as markup.

type Child = Node | string | null | undefined;

export interface Attrs {
  class?: string;
  text?: string;
  title?: string;
  type?: string;
  value?: string;
  placeholder?: string;
  disabled?: boolean;
  data?: Record<string, string>;
  onClick?: (event: MouseEvent) => void;
  onInput?: (event: Event) => void;
  onSubmit?: (event: SubmitEvent) => void;
}

export function h(tag: string, attrs: Attrs = {}, ...children: Child[]): HTMLElement {
  const el = document.createElement(tag);
  if (attrs.class) el.className = attrs.class;
  if (attrs.text !== undefined) el.textContent = attrs.text;
  if (attrs.title !== undefined) el.title = attrs.title;
  if (attrs.type !== undefined) (el as HTMLInputElement).type = attrs.type;
  if (attrs.value !== undefined) (el as HTMLInputElement).value = attrs.value;
  if (attrs.placeholder !== undefined) {
    (el as HTMLInputElement).placeholder = attrs.placeholder;
  }
  if (attrs.disabled !== undefined) {
    (el as HTMLButtonElement).disabled = attrs.disabled;
  }
  if (attrs.data) {
    for (const [key, value] of Object.entries(attrs.data)) {
      el.dataset[key] = value;
    }
  }
  if (attrs.onClick) el.addEventListener("click", attrs.onClick as EventListener);
  if (attrs.onInput) el.addEventListener("input", attrs.onInput);
  if (attrs.onSubmit) el.addEventListener("submit", attrs.onSubmit as EventListener);
  for (const child of children) {
    if (child === null || child === undefined) continue;
    el.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return el;
}

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}
