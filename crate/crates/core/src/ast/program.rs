use std::collections::HashMap;

use super::expr::{Definition, Item, OperatorDecl};

/// Ordered top-level items with a by-name index. Global names are unique.
#[derive(Debug, Clone, Default)]
pub struct Program {
    items: Vec<Item>,
    index: HashMap<String, usize>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Program {
    /// Builds a program, returning the first duplicated global name on failure.
    pub fn new(items: Vec<Item>) -> Result<Program, String> {
        let mut program = Program::default();
        for item in items {
            program.push(item)?;
        }
        Ok(program)
    }

    pub fn push(&mut self, item: Item) -> Result<(), String> {
        let name = item.name().to_string();
        if self.index.contains_key(&name) {
            return Err(name);
        }
        self.index.insert(name, self.items.len());
        self.items.push(item);
        Ok(())
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn into_items(self) -> Vec<Item> {
        self.items
    }

    pub fn get(&self, name: &str) -> Option<&Item> {
        self.index.get(name).map(|&i| &self.items[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn definition(&self, name: &str) -> Option<&Definition> {
        match self.get(name)? {
            Item::Definition(d) => Some(d),
            Item::Operator(_) => None,
        }
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorDecl> {
        match self.get(name)? {
            Item::Operator(o) => Some(o),
            Item::Definition(_) => None,
        }
    }

    pub fn definitions(&self) -> impl Iterator<Item = &Definition> {
        self.items.iter().filter_map(|it| match it {
            Item::Definition(d) => Some(d),
            Item::Operator(_) => None,
        })
    }

    pub fn operators(&self) -> impl Iterator<Item = &OperatorDecl> {
        self.items.iter().filter_map(|it| match it {
            Item::Operator(o) => Some(o),
            Item::Definition(_) => None,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
